/** Client-side view state: plotted series, time mirror, selections.
 *
 * The buffer holds one point per (parameter, instant). Historic fetches
 * and live stream frames merge into the same keyed store, so an instant
 * arriving twice (overlap between a re-fetch and the stream, or a frame
 * replayed across a reconnect) updates in place instead of duplicating.
 */

import type {
  FrameSeriesPayload,
  StreamFramePayload,
  TimePayload,
} from "./types.js";
import { isoToEpoch } from "./time.js";

export interface Point {
  t: number;
  v: number | null;
  padded: boolean;
}

export class SeriesBuffer {
  private series = new Map<string, Map<number, Point>>();

  parameters(): string[] {
    return [...this.series.keys()];
  }

  private bucket(id: string): Map<number, Point> {
    let b = this.series.get(id);
    if (!b) {
      b = new Map();
      this.series.set(id, b);
    }
    return b;
  }

  addFrameSeries(fs: FrameSeriesPayload): void {
    const times = fs.times.map(isoToEpoch);
    fs.parameters.forEach((id, col) => {
      const b = this.bucket(id);
      for (let row = 0; row < times.length; row++) {
        if (fs.missing[row][col]) continue; // nothing measured yet
        b.set(times[row], {
          t: times[row],
          v: fs.values[row][col],
          padded: fs.padded[row][col],
        });
      }
    });
  }

  /** Stream frames carry columns in the subscription's parameter order. */
  addStreamFrame(frame: StreamFramePayload, parameters: string[]): void {
    const t = isoToEpoch(frame.ts);
    parameters.forEach((id, col) => {
      const v = frame.values[col];
      if (v === null || v === undefined) return;
      this.bucket(id).set(t, { t, v, padded: frame.padded[col] });
    });
  }

  /** Points for one parameter within [t0, t1], time-ordered. */
  points(id: string, t0: number, t1: number): Point[] {
    const b = this.series.get(id);
    if (!b) return [];
    const out: Point[] = [];
    for (const p of b.values()) {
      if (p.t >= t0 && p.t <= t1) out.push(p);
    }
    out.sort((a, z) => a.t - z.t);
    return out;
  }

  latest(id: string): Point | null {
    const b = this.series.get(id);
    if (!b || b.size === 0) return null;
    let best: Point | null = null;
    for (const p of b.values()) {
      if (best === null || p.t > best.t) best = p;
    }
    return best;
  }

  count(id: string): number {
    return this.series.get(id)?.size ?? 0;
  }

  /** Drop points older than the horizon to bound memory on long runs. */
  prune(before: number): void {
    for (const b of this.series.values()) {
      for (const t of b.keys()) {
        if (t < before) b.delete(t);
      }
    }
  }
}

/** Numeric mirror of the server clock plus what the operator is viewing. */
export class ViewState {
  selected: string[] = [];
  range: { from: number; to: number } = { from: 0, to: 0 };
  liveFollow = true;
  /** Name of the forecast model to overlay, or null for none. */
  model: string | null = null;

  realTime = 0;
  systemTime = 0;
  simulationTime = 0;
  simulationSpeed = 1;
  animationSpeed = 1;

  readonly buffer = new SeriesBuffer();

  /** Adopt the server's authoritative clock payload. While live-follow
   * is on, the plotted range's right edge rides simulation time. */
  applyTime(t: TimePayload): void {
    this.realTime = isoToEpoch(t.real_time);
    this.systemTime = isoToEpoch(t.system_time);
    this.simulationTime = isoToEpoch(t.simulation_time);
    this.simulationSpeed = t.simulation_speed;
    this.animationSpeed = t.animation_speed;
    if (this.liveFollow) {
      const span = this.range.to - this.range.from;
      this.range = {
        from: this.simulationTime - (span > 0 ? span : 300),
        to: this.simulationTime,
      };
    }
  }

  setRange(from: number, to: number): void {
    this.range = { from, to };
    this.liveFollow = false;
  }

  follow(span = 300): void {
    this.liveFollow = true;
    this.range = { from: this.simulationTime - span, to: this.simulationTime };
  }
}
