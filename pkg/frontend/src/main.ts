// Scenario workbench wiring: one in-memory state object, no routing.
// Seasons render side by side because the seasonal contrast is the point.

import { ApiError, Client } from "./api.js";
import type { SchemaDoc, SeasonComparison, Sweep, WtpSlice } from "./api.js";
import { renderForecastPair, renderPriceSweep, renderWtpSlice } from "./charts.js";
import { buildAttributeFields, buildCutSelect, readScenario } from "./form.js";

interface WorkbenchState {
  schema: SchemaDoc | null;
  comparison: SeasonComparison | null;
  sweep: Sweep | null;
  wtp: WtpSlice | null;
}

const state: WorkbenchState = { schema: null, comparison: null, sweep: null, wtp: null };

const params = new URLSearchParams(window.location.search);
const client = new Client(params.get("api") ?? "http://127.0.0.1:8080");

function element(id: string): HTMLElement {
  return document.getElementById(id)!;
}

function showError(error: unknown): void {
  const banner = element("error-banner");
  if (error instanceof ApiError) {
    banner.textContent = `${error.code}: ${error.message}${error.detail ? ` (${error.detail})` : ""}`;
  } else if (error instanceof DOMException && error.name === "AbortError") {
    return; // superseded by a newer request
  } else {
    banner.textContent = String(error);
  }
  banner.hidden = false;
}

function clearError(): void {
  const banner = element("error-banner");
  banner.hidden = true;
  banner.textContent = "";
}

async function refreshForecast(): Promise<void> {
  if (!state.schema) return;
  clearError();
  const scenario = readScenario(state.schema, document);
  try {
    state.comparison = await client.simulate<SeasonComparison>({
      ...scenario,
      compare_seasons: true,
    });
    renderForecastPair(element("forecast-charts"), element("forecast-summary"), state.comparison);
  } catch (error) {
    showError(error);
  }
}

async function refreshSweep(): Promise<void> {
  if (!state.schema) return;
  clearError();
  const scenario = readScenario(state.schema, document);
  const lo = Number((element("sweep-lo") as HTMLInputElement).value);
  const hi = Number((element("sweep-hi") as HTMLInputElement).value);
  const step = Number((element("sweep-step") as HTMLInputElement).value);
  const grid: number[] = [];
  for (let price = lo; price <= hi + 1e-9; price += step) grid.push(Number(price.toFixed(6)));
  try {
    state.sweep = await client.simulate<Sweep>({ ...scenario, price_grid: grid });
    renderPriceSweep(element("sweep-chart"), state.sweep);
  } catch (error) {
    showError(error);
  }
}

async function refreshWtp(): Promise<void> {
  if (!state.schema) return;
  const cut = (element("cut-select") as HTMLSelectElement).value;
  const season = (element("wtp-season") as HTMLSelectElement).value;
  try {
    state.wtp = await client.wtp(cut, season);
    renderWtpSlice(element("wtp-box"), state.wtp.entries);
  } catch (error) {
    showError(error);
  }
}

async function onCutChange(): Promise<void> {
  if (!state.schema) return;
  const cut = (element("cut-select") as HTMLSelectElement).value;
  const fields = buildAttributeFields(state.schema, cut);
  element("attribute-box").replaceChildren(fields);
  await Promise.all([refreshForecast(), refreshWtp()]);
}

async function boot(): Promise<void> {
  try {
    state.schema = await client.schema();
  } catch (error) {
    showError(error);
    return;
  }
  const cutSelect = buildCutSelect(state.schema);
  element("cut-box").replaceChildren(cutSelect);
  cutSelect.addEventListener("change", onCutChange);

  const seasonSelect = document.createElement("select");
  seasonSelect.id = "wtp-season";
  for (const season of state.schema.seasons) {
    const option = document.createElement("option");
    option.value = season;
    option.textContent = season;
    seasonSelect.appendChild(option);
  }
  seasonSelect.addEventListener("change", refreshWtp);
  element("wtp-season-box").replaceChildren(seasonSelect);

  element("run-button").addEventListener("click", refreshForecast);
  element("sweep-button").addEventListener("click", refreshSweep);
  element("attribute-box").addEventListener("change", refreshForecast);
  await onCutChange();
}

boot();
