// Typed client for the scenario service. The UI never computes model
// quantities itself: everything rendered comes straight from these payloads.

export interface SchemaAttribute {
  name: string;
  kind: "effects_categorical" | "binary_claim" | "continuous";
  levels: string[];
  base: string | null;
  unit: string | null;
  design_levels: number[];
  applies_to: string[];
}

export interface SchemaDoc {
  cuts: string[];
  seasons: string[];
  attributes: SchemaAttribute[];
  price_levels: Record<string, number[]>;
  weight_levels: Record<string, number[]>;
  weight_unit: Record<string, string>;
}

export interface Forecast {
  cut: string;
  season: string;
  price: number;
  probabilities: number[];
  expected_quantity: number;
  zero_purchase_probability: number;
  expected_revenue: number;
}

export interface SeasonComparison {
  winter: Forecast;
  summer: Forecast;
  delta_probabilities: number[];
  delta_expected_quantity: number;
}

export interface Sweep {
  points: Forecast[];
  argmax_price: number;
  argmax_index: number;
}

export interface WtpEntry {
  attribute: string;
  level: string;
  wtp: number;
}

export interface WtpSlice {
  cut: string;
  season: string;
  entries: WtpEntry[];
}

export interface ScenarioRequest {
  cut: string;
  season: string;
  levels: Record<string, string | number>;
  price: number;
  weight: number;
  price_grid?: number[];
  compare_seasons?: boolean;
}

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public detail: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "internal";
  let message = `HTTP ${response.status}`;
  let detail = "";
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code;
      message = body.error.message;
      detail = body.error.detail ?? "";
    }
  } catch {
    // non-JSON error body: keep the HTTP status message
  }
  throw new ApiError(code, message, detail);
}

export class Client {
  private inflight: AbortController | null = null;

  constructor(public baseUrl: string) {}

  async schema(): Promise<SchemaDoc> {
    const response = await fetch(`${this.baseUrl}/schema`);
    if (!response.ok) await parseError(response);
    return response.json();
  }

  async wtp(cut: string, season: string): Promise<WtpSlice> {
    const response = await fetch(
      `${this.baseUrl}/wtp?cut=${encodeURIComponent(cut)}&season=${encodeURIComponent(season)}`,
    );
    if (!response.ok) await parseError(response);
    return response.json();
  }

  // At most one simulate request is in flight: starting a new one aborts
  // the previous (latest wins).
  async simulate<T>(body: ScenarioRequest): Promise<T> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await fetch(`${this.baseUrl}/simulate`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
        signal: controller.signal,
      });
      if (!response.ok) await parseError(response);
      return (await response.json()) as T;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
