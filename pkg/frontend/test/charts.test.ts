// Renderer unit tests against crafted payloads (no server needed).

import { afterEach, describe, expect, it, vi } from "vitest";

import { Client } from "../src/api.js";
import type { Forecast } from "../src/api.js";
import { renderQuantityBars, shortNumber } from "../src/charts.js";

function degenerateForecast(): Forecast {
  return {
    cut: "ground",
    season: "winter",
    price: 10,
    probabilities: [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    expected_quantity: 0,
    zero_purchase_probability: 1,
    expected_revenue: 0,
  };
}

describe("quantity bars", () => {
  it("degenerate forecast renders one full bar", () => {
    const box = document.createElement("div");
    renderQuantityBars(box, degenerateForecast(), "winter");
    const bars = [...box.querySelectorAll("rect.bar")];
    expect(bars.length).toBe(11);
    const heights = bars.map((bar) => Number(bar.getAttribute("height")));
    expect(Math.max(...heights)).toBe(heights[0]);
    for (const h of heights.slice(1)) expect(h).toBeLessThanOrEqual(0.5);
    expect(bars[0].getAttribute("data-probability")).toBe("1");
  });
});

describe("shortNumber", () => {
  it("truncates the decimal string without recomputing", () => {
    expect(shortNumber(0.123456789)).toBe("0.12345");
    expect(shortNumber(2)).toBe("2");
  });
});

describe("latest-wins simulate", () => {
  afterEach(() => vi.restoreAllMocks());

  it("aborts the previous in-flight request", async () => {
    const aborted: boolean[] = [];
    vi.stubGlobal(
      "fetch",
      vi.fn((_: string, init?: RequestInit) => {
        const signal = init?.signal as AbortSignal;
        return new Promise<Response>((resolve, reject) => {
          signal.addEventListener("abort", () => {
            aborted.push(true);
            reject(new DOMException("aborted", "AbortError"));
          });
          setTimeout(
            () =>
              resolve(
                new Response(JSON.stringify({ forecast: {} }), {
                  status: 200,
                  headers: { "Content-Type": "application/json" },
                }),
              ),
            50,
          );
        });
      }),
    );
    const client = new Client("http://example.invalid");
    const body = { cut: "ground", season: "winter", levels: {}, price: 1, weight: 1 };
    const first = client.simulate(body).catch((error) => error);
    const second = client.simulate(body);
    const firstResult = await first;
    expect(firstResult).toBeInstanceOf(DOMException);
    expect((firstResult as DOMException).name).toBe("AbortError");
    await expect(second).resolves.toBeTruthy();
    expect(aborted).toEqual([true]);
  });
});
