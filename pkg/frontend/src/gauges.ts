/** Gauge models: latest value per parameter scaled into its catalog
 * bounds. Pure data in, pure data out; painting lives in render.ts. */

import type { CatalogPayload, ParameterInfo } from "./types.js";
import type { Point } from "./state.js";

/** Parameters shown when the operator has not picked any. */
export const DEFAULT_GAUGES = [
  "WTUR.ActivePower",
  "WROT.RotorRPM",
  "WMET.WindSpeed",
  "WYAW.YawAngle",
];

export interface GaugeModel {
  id: string;
  unit: string;
  value: number | null;
  lower: number;
  upper: number;
  /** Needle position in [0, 1], null when there is no value. */
  fraction: number | null;
  /** Value is a carry-forward, not a fresh measurement. */
  padded: boolean;
  /** No data for more than staleAfter grid steps. */
  stale: boolean;
}

export function catalogIndex(
  catalog: CatalogPayload,
): Map<string, ParameterInfo> {
  return new Map(catalog.parameters.map((p) => [p.id, p]));
}

export function gaugeModel(
  info: ParameterInfo,
  latest: Point | null,
  now: number,
  step: number,
  staleAfter = 3,
): GaugeModel {
  const lower = info.lower_bound ?? 0;
  const upper = info.upper_bound ?? 1;
  const value = latest?.v ?? null;
  let fraction: number | null = null;
  if (value !== null && upper > lower) {
    fraction = Math.min(1, Math.max(0, (value - lower) / (upper - lower)));
  }
  const stale = latest === null || now - latest.t > staleAfter * step;
  return {
    id: info.id,
    unit: info.unit,
    value,
    lower,
    upper,
    fraction,
    padded: latest?.padded ?? false,
    stale,
  };
}
