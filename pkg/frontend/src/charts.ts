// SVG renderers. Pixel geometry is presentation; every number shown to the
// user (labels, data-* attributes, summaries) is the raw API payload value
// stringified, never recomputed client-side.

import type { Forecast, SeasonComparison, Sweep } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

// Truncate the payload's decimal string for compact labels; a string
// operation, not arithmetic.
export function shortNumber(value: number, chars = 7): string {
  const text = String(value);
  return text.length <= chars ? text : text.slice(0, chars);
}

export function renderQuantityBars(
  container: HTMLElement,
  forecast: Forecast,
  title: string,
): void {
  container.replaceChildren();
  const width = 340;
  const height = 190;
  const pad = 24;
  const probabilities = forecast.probabilities;
  const barWidth = (width - 2 * pad) / probabilities.length;
  const svg = svgElement("svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    class: "quantity-chart",
    "data-season": forecast.season,
  });
  const peak = Math.max(...probabilities, 1e-12);
  probabilities.forEach((p, quantity) => {
    const barHeight = (p / peak) * (height - 3 * pad);
    const bar = svgElement("rect", {
      x: String(pad + quantity * barWidth + 1),
      y: String(height - pad - barHeight),
      width: String(barWidth - 2),
      height: String(Math.max(barHeight, 0.5)),
      class: "bar",
      "data-quantity": String(quantity),
      "data-probability": String(p),
    });
    const tip = svgElement("title", {});
    tip.textContent = `${quantity} units: ${String(p)}`;
    bar.appendChild(tip);
    svg.appendChild(bar);
    const label = svgElement("text", {
      x: String(pad + quantity * barWidth + barWidth / 2),
      y: String(height - pad + 12),
      "text-anchor": "middle",
      class: "tick",
    });
    label.textContent = String(quantity);
    svg.appendChild(label);
  });
  const heading = document.createElement("h3");
  heading.textContent = title;
  container.appendChild(heading);
  container.appendChild(svg);
}

export function renderForecastPair(
  chartsBox: HTMLElement,
  summaryBox: HTMLElement,
  comparison: SeasonComparison,
): void {
  chartsBox.replaceChildren();
  const winterBox = document.createElement("div");
  const summerBox = document.createElement("div");
  winterBox.id = "winter-chart";
  summerBox.id = "summer-chart";
  chartsBox.appendChild(winterBox);
  chartsBox.appendChild(summerBox);
  renderQuantityBars(winterBox, comparison.winter, `winter @ $${String(comparison.winter.price)}`);
  renderQuantityBars(summerBox, comparison.summer, `summer @ $${String(comparison.summer.price)}`);

  summaryBox.replaceChildren();
  const rows: Array<[string, string, string]> = [
    [
      "expected quantity",
      String(comparison.winter.expected_quantity),
      String(comparison.summer.expected_quantity),
    ],
    [
      "zero-purchase probability",
      String(comparison.winter.zero_purchase_probability),
      String(comparison.summer.zero_purchase_probability),
    ],
    [
      "expected revenue",
      String(comparison.winter.expected_revenue),
      String(comparison.summer.expected_revenue),
    ],
  ];
  const table = document.createElement("table");
  table.id = "summary-table";
  const head = document.createElement("tr");
  for (const text of ["", "winter", "summer"]) {
    const cell = document.createElement("th");
    cell.textContent = text;
    head.appendChild(cell);
  }
  table.appendChild(head);
  for (const [label, winter, summer] of rows) {
    const row = document.createElement("tr");
    const name = document.createElement("td");
    name.textContent = label;
    row.appendChild(name);
    for (const value of [winter, summer]) {
      const cell = document.createElement("td");
      cell.textContent = shortNumber(Number(value));
      cell.setAttribute("data-value", value);
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  const delta = document.createElement("p");
  delta.id = "delta-expected";
  delta.setAttribute("data-value", String(comparison.delta_expected_quantity));
  delta.textContent = `expected-quantity delta (summer − winter): ${shortNumber(
    comparison.delta_expected_quantity,
  )}`;
  summaryBox.appendChild(table);
  summaryBox.appendChild(delta);
}

export function renderPriceSweep(container: HTMLElement, sweep: Sweep): void {
  container.replaceChildren();
  const width = 560;
  const height = 240;
  const pad = 36;
  const prices = sweep.points.map((point) => point.price);
  const revenues = sweep.points.map((point) => point.expected_revenue);
  const priceMin = Math.min(...prices);
  const priceMax = Math.max(...prices);
  const revenueMax = Math.max(...revenues, 1e-12);
  const x = (price: number) =>
    pad + ((price - priceMin) / Math.max(priceMax - priceMin, 1e-12)) * (width - 2 * pad);
  const y = (revenue: number) => height - pad - (revenue / revenueMax) * (height - 2 * pad);

  const svg = svgElement("svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    class: "sweep-chart",
  });
  const path = sweep.points
    .map((point, i) => `${i === 0 ? "M" : "L"}${x(point.price)},${y(point.expected_revenue)}`)
    .join(" ");
  svg.appendChild(svgElement("path", { d: path, class: "revenue-line", fill: "none" }));
  sweep.points.forEach((point, index) => {
    const dot = svgElement("circle", {
      cx: String(x(point.price)),
      cy: String(y(point.expected_revenue)),
      r: index === sweep.argmax_index ? "6" : "3",
      class: index === sweep.argmax_index ? "sweep-point argmax" : "sweep-point",
      "data-price": String(point.price),
      "data-revenue": String(point.expected_revenue),
      "data-expected-quantity": String(point.expected_quantity),
    });
    const tip = svgElement("title", {});
    tip.textContent = `$${String(point.price)}: revenue ${String(point.expected_revenue)}`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  });
  const marker = document.createElement("p");
  marker.id = "argmax-price";
  marker.setAttribute("data-value", String(sweep.argmax_price));
  marker.textContent = `revenue-maximizing price: $${String(sweep.argmax_price)}`;
  container.appendChild(svg);
  container.appendChild(marker);
}

export function renderWtpSlice(container: HTMLElement, entries: Array<{ attribute: string; level: string; wtp: number }>): void {
  container.replaceChildren();
  const table = document.createElement("table");
  table.id = "wtp-table";
  const head = document.createElement("tr");
  for (const text of ["attribute", "level", "WTP ($/lb)"]) {
    const cell = document.createElement("th");
    cell.textContent = text;
    head.appendChild(cell);
  }
  table.appendChild(head);
  for (const entry of entries) {
    const row = document.createElement("tr");
    const attr = document.createElement("td");
    attr.textContent = entry.attribute;
    const level = document.createElement("td");
    level.textContent = entry.level;
    const value = document.createElement("td");
    value.textContent = shortNumber(entry.wtp);
    value.setAttribute("data-value", String(entry.wtp));
    value.className = entry.wtp < 0 ? "negative" : "positive";
    row.appendChild(attr);
    row.appendChild(level);
    row.appendChild(value);
    table.appendChild(row);
  }
  container.appendChild(table);
}
