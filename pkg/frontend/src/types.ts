/** Wire payloads, field for field as the server sends them. */

export interface ParameterInfo {
  id: string;
  node: string;
  unit: string;
  kind: string;
  lower_bound: number | null;
  upper_bound: number | null;
  /** Admissible integer states for enumerated parameters, null for analog. */
  codes: number[] | null;
  forecast_rank: number | null;
}

export interface CatalogPayload {
  parameters: ParameterInfo[];
  forecast_set: string[];
}

export interface TimePayload {
  real_time: string;
  system_time: string;
  simulation_time: string;
  simulation_speed: number;
  animation_speed: number;
}

/** Writable subset for PUT /time. */
export interface TimePatch {
  system_time?: string;
  simulation_time?: string;
  simulation_speed?: number;
  animation_speed?: number;
}

/** Resampled grid from /historic: one values row per instant. */
export interface FrameSeriesPayload {
  start: string;
  step: number;
  parameters: string[];
  times: string[];
  values: (number | null)[][];
  padded: boolean[][];
  missing: boolean[][];
}

export interface ForecastPayload {
  model: string;
  kind: string;
  label: string;
  timescale: string;
  at: string;
  times: string[];
  parameters: string[];
  values: number[][];
  provenance: Record<string, unknown>;
  norm: Record<string, unknown> | null;
}

/** One server-sent stream event. */
export interface StreamFramePayload {
  seq: number;
  ts: string;
  values: (number | null)[];
  padded: boolean[];
}

export interface ErrorPayload {
  error: string;
  message: string;
}
