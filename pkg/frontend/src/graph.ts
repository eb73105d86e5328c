/** Graph panel composition: measured history left of the simulation-time
 * marker, forecast overlay strictly beyond it. Every rendered point comes
 * from a server payload; nothing is interpolated or invented here. */

import type { ForecastPayload } from "./types.js";
import type { Point, SeriesBuffer } from "./state.js";
import { isoToEpoch } from "./time.js";

export interface OverlayPoint {
  t: number;
  v: number;
}

export interface GraphData {
  marker: number;
  range: { from: number; to: number };
  /** Parameter id -> measured points with t <= marker. */
  history: Map<string, Point[]>;
  /** Parameter id -> forecast points with t > marker; empty w/o model. */
  forecast: Map<string, OverlayPoint[]>;
}

/** Clip a requested range so `to` never passes system time; the server
 * would reject it as FutureRange, so ask only for what can exist. */
export function clampRange(
  from: number,
  to: number,
  systemTime: number,
): [number, number] {
  const hi = Math.min(to, systemTime);
  return [Math.min(from, hi), hi];
}

/** Grid step for a zoom span, targeting a few hundred points per fetch:
 * a 30 s window gets per-second resolution, a day gets ~2.5 min. */
export function stepForSpan(spanSeconds: number, targetPoints = 600): number {
  return Math.max(1, Math.ceil(spanSeconds / targetPoints));
}

export function composeGraph(
  buffer: SeriesBuffer,
  parameters: string[],
  range: { from: number; to: number },
  marker: number,
  forecast: ForecastPayload | null,
): GraphData {
  const history = new Map<string, Point[]>();
  for (const id of parameters) {
    history.set(
      id,
      buffer.points(id, range.from, Math.min(range.to, marker)),
    );
  }

  const overlay = new Map<string, OverlayPoint[]>();
  if (forecast) {
    const times = forecast.times.map(isoToEpoch);
    forecast.parameters.forEach((id, col) => {
      if (!parameters.includes(id)) return;
      const pts: OverlayPoint[] = [];
      for (let row = 0; row < times.length; row++) {
        if (times[row] <= marker) continue; // overlay begins after "now"
        pts.push({ t: times[row], v: forecast.values[row][col] });
      }
      overlay.set(id, pts);
    });
  }
  return { marker, range, history, forecast: overlay };
}
