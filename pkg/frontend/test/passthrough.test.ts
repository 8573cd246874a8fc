// End-to-end pass-through: spawn the real service, render its payloads, and
// check that every datapoint in the DOM equals the API value verbatim.

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";
import type { SchemaDoc, SeasonComparison, Sweep } from "../src/api.js";
import { renderForecastPair, renderPriceSweep, renderWtpSlice } from "../src/charts.js";
import { buildAttributeFields, buildCutSelect, readScenario } from "../src/form.js";

let server: ChildProcess;
let client: Client;
let schema: SchemaDoc;

const FIXTURE_LEVELS: Record<string, string | number> = {
  fat_colour: "white",
  meat_colour: "red",
  marbling: "not_marbled",
  packaging: "vacuum",
  brand: "brand_5",
  certified_logo: "self_assurance",
  feed: "grass",
  traceable: "yes",
  antibiotic_free: "yes",
  hormone_added: "no",
  organic: "yes",
  angus: "yes",
  non_gmo: "yes",
  pasture_raised: "yes",
  natural: "yes",
  use_by: 3,
};

beforeAll(async () => {
  server = spawn("python3", ["-m", "quantal_market.cli", "serve", "--listen", "127.0.0.1:0", "--quiet"], {
    cwd: "..",
    stdio: ["ignore", "pipe", "inherit"],
  });
  const url = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("service did not start")), 30_000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const match = chunk.toString().match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server.on("exit", (code) => reject(new Error(`service exited early (${code})`)));
  });
  client = new Client(url);
  schema = await client.schema();
});

afterAll(() => {
  server?.kill();
});

function fixtureScenario(cut = "roast") {
  const levels: Record<string, string | number> = {};
  for (const attr of schema.attributes) {
    if (!attr.applies_to.includes(cut)) continue;
    if (attr.name === "price" || attr.name === "weight") continue;
    levels[attr.name] = FIXTURE_LEVELS[attr.name];
  }
  return { cut, season: "winter", levels, price: 17.0, weight: 4.0 };
}

describe("schema-driven form", () => {
  it("offers exactly the schema's cuts and levels", () => {
    const cutSelect = buildCutSelect(schema);
    expect([...cutSelect.options].map((option) => option.value)).toEqual(schema.cuts);

    const fields = buildAttributeFields(schema, "roast");
    for (const select of fields.querySelectorAll("select")) {
      const name = select.getAttribute("data-attribute")!;
      const attr = schema.attributes.find((a) => a.name === name)!;
      const offered = [...select.querySelectorAll("option")].map((option) => option.value);
      if (attr.kind === "continuous") {
        const allowed =
          name === "price"
            ? schema.price_levels.roast
            : name === "weight"
              ? schema.weight_levels.roast
              : attr.design_levels;
        expect(offered).toEqual(allowed.map(String));
      } else {
        expect(offered).toEqual(attr.levels);
      }
    }
  });

  it("omits attributes that do not apply to the cut", () => {
    const fields = buildAttributeFields(schema, "ground");
    const names = [...fields.querySelectorAll("select")].map((select) =>
      select.getAttribute("data-attribute"),
    );
    expect(names).not.toContain("marbling");
    const roastFields = buildAttributeFields(schema, "roast");
    const roastNames = [...roastFields.querySelectorAll("select")].map((select) =>
      select.getAttribute("data-attribute"),
    );
    expect(roastNames).toContain("marbling");
  });

  it("reads a scenario straight back from the form", () => {
    const root = document.createElement("div");
    root.appendChild(buildCutSelect(schema));
    (root.querySelector("#cut-select") as HTMLSelectElement).value = "roast";
    const fields = buildAttributeFields(schema, "roast");
    root.appendChild(fields);
    const scenario = readScenario(schema, root);
    expect(scenario.cut).toBe("roast");
    expect(schema.price_levels.roast.map(String)).toContain(String(scenario.price));
    expect(Object.keys(scenario.levels)).toContain("marbling");
  });
});

describe("forecast pass-through", () => {
  it("chart datapoints equal the API payload", async () => {
    const payload = await client.simulate<SeasonComparison>({
      ...fixtureScenario(),
      compare_seasons: true,
    });
    const charts = document.createElement("div");
    const summary = document.createElement("div");
    renderForecastPair(charts, summary, payload);

    for (const [season, forecast] of [
      ["winter", payload.winter],
      ["summer", payload.summer],
    ] as const) {
      const bars = charts.querySelectorAll(`svg[data-season="${season}"] rect.bar`);
      expect(bars.length).toBe(forecast.probabilities.length);
      bars.forEach((bar, index) => {
        expect(bar.getAttribute("data-quantity")).toBe(String(index));
        expect(bar.getAttribute("data-probability")).toBe(String(forecast.probabilities[index]));
      });
    }
    const cells = summary.querySelectorAll("#summary-table td[data-value]");
    const expected = [
      payload.winter.expected_quantity,
      payload.summer.expected_quantity,
      payload.winter.zero_purchase_probability,
      payload.summer.zero_purchase_probability,
      payload.winter.expected_revenue,
      payload.summer.expected_revenue,
    ];
    expect([...cells].map((cell) => cell.getAttribute("data-value"))).toEqual(
      expected.map(String),
    );
    expect(summary.querySelector("#delta-expected")!.getAttribute("data-value")).toBe(
      String(payload.delta_expected_quantity),
    );
  });

  it("surfaces API errors verbatim with their code", async () => {
    const scenario = fixtureScenario();
    await expect(
      client.simulate({ ...scenario, cut: "brisket" }),
    ).rejects.toSatisfy((error: unknown) => {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).code).toBe("unknown_cut");
      return true;
    });
  });
});

describe("price sweep pass-through", () => {
  it("marks the argmax point reported by the API", async () => {
    const grid = [8, 12, 16, 20, 24];
    const payload = await client.simulate<Sweep>({
      ...fixtureScenario("ground"),
      price_grid: grid,
    });
    const container = document.createElement("div");
    renderPriceSweep(container, payload);

    const dots = container.querySelectorAll("circle.sweep-point");
    expect(dots.length).toBe(payload.points.length);
    dots.forEach((dot, index) => {
      expect(dot.getAttribute("data-price")).toBe(String(payload.points[index].price));
      expect(dot.getAttribute("data-revenue")).toBe(
        String(payload.points[index].expected_revenue),
      );
    });
    const argmax = container.querySelectorAll("circle.argmax");
    expect(argmax.length).toBe(1);
    expect(argmax[0].getAttribute("data-price")).toBe(
      String(payload.points[payload.argmax_index].price),
    );
    expect(container.querySelector("#argmax-price")!.getAttribute("data-value")).toBe(
      String(payload.argmax_price),
    );
  });

  it("one-point grid yields a single marker", async () => {
    const payload = await client.simulate<Sweep>({
      ...fixtureScenario("ground"),
      price_grid: [15],
    });
    const container = document.createElement("div");
    renderPriceSweep(container, payload);
    expect(container.querySelectorAll("circle.sweep-point").length).toBe(1);
    expect(container.querySelectorAll("circle.argmax").length).toBe(1);
  });
});

describe("wtp pass-through", () => {
  it("table values equal the API slice", async () => {
    const slice = await client.wtp("ground", "winter");
    const container = document.createElement("div");
    renderWtpSlice(container, slice.entries);
    const cells = container.querySelectorAll("#wtp-table td[data-value]");
    expect(cells.length).toBe(slice.entries.length);
    cells.forEach((cell, index) => {
      expect(cell.getAttribute("data-value")).toBe(String(slice.entries[index].wtp));
    });
  });
});
