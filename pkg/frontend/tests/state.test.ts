import { describe, expect, it } from "vitest";

import { SeriesBuffer, ViewState } from "../src/state.js";
import type { FrameSeriesPayload, TimePayload } from "../src/types.js";
import { T0, frameAt, iso } from "./fixture.js";

function series(
  params: string[],
  t0: number,
  n: number,
): FrameSeriesPayload {
  const times = Array.from({ length: n }, (_, i) => t0 + i);
  return {
    start: iso(t0),
    step: 1,
    parameters: params,
    times: times.map(iso),
    values: times.map((t) => params.map((_, c) => t - T0 + c)),
    padded: times.map(() => params.map(() => false)),
    missing: times.map(() => params.map(() => false)),
  };
}

function clock(sim: number, sys = sim): TimePayload {
  return {
    real_time: iso(sys + 100),
    system_time: iso(sys),
    simulation_time: iso(sim),
    simulation_speed: 1,
    animation_speed: 1,
  };
}

describe("SeriesBuffer", () => {
  it("merges historic rows and keeps them time-ordered", () => {
    const buf = new SeriesBuffer();
    buf.addFrameSeries(series(["a", "b"], T0 + 10, 5));
    const pts = buf.points("a", T0, T0 + 100);
    expect(pts).toHaveLength(5);
    expect(pts.map((p) => p.t)).toEqual([10, 11, 12, 13, 14].map((d) => T0 + d));
    expect(buf.latest("b")?.v).toBe(15);
  });

  it("skips missing cells instead of plotting them", () => {
    const fs = series(["a"], T0, 3);
    fs.missing[1][0] = true;
    fs.values[1][0] = null;
    const buf = new SeriesBuffer();
    buf.addFrameSeries(fs);
    expect(buf.count("a")).toBe(2);
  });

  it("overlapping stream frames update in place, never duplicate", () => {
    const buf = new SeriesBuffer();
    buf.addFrameSeries(series(["WTUR.ActivePower"], T0 + 1, 5)); // t = 1..5
    const before = buf.count("WTUR.ActivePower");
    buf.addStreamFrame(frameAt(4), ["WTUR.ActivePower"]); // t = 4 again
    buf.addStreamFrame(frameAt(5), ["WTUR.ActivePower"]);
    buf.addStreamFrame(frameAt(6), ["WTUR.ActivePower"]); // one new instant
    expect(buf.count("WTUR.ActivePower")).toBe(before + 1);
    const pts = buf.points("WTUR.ActivePower", T0, T0 + 10);
    const times = pts.map((p) => p.t);
    expect(new Set(times).size).toBe(times.length);
  });

  it("prunes old points", () => {
    const buf = new SeriesBuffer();
    buf.addFrameSeries(series(["a"], T0, 10));
    buf.prune(T0 + 5);
    expect(buf.count("a")).toBe(5);
  });
});

describe("ViewState", () => {
  it("live-follow keeps the range's right edge on simulation time", () => {
    const vs = new ViewState();
    vs.applyTime(clock(T0 + 500));
    vs.follow(60);
    expect(vs.range.to).toBe(T0 + 500);
    vs.applyTime(clock(T0 + 530));
    expect(vs.range.to).toBe(T0 + 530);
    expect(vs.range.from).toBe(T0 + 530 - 60);
  });

  it("an explicit range turns live-follow off and stays put", () => {
    const vs = new ViewState();
    vs.applyTime(clock(T0 + 500));
    vs.setRange(T0 + 100, T0 + 200);
    expect(vs.liveFollow).toBe(false);
    vs.applyTime(clock(T0 + 900));
    expect(vs.range).toEqual({ from: T0 + 100, to: T0 + 200 });
  });

  it("mirrors every clock field numerically", () => {
    const vs = new ViewState();
    vs.applyTime({
      real_time: iso(T0 + 10),
      system_time: iso(T0 + 5),
      simulation_time: iso(T0 + 2),
      simulation_speed: 0.5,
      animation_speed: 3,
    });
    expect(vs.realTime).toBe(T0 + 10);
    expect(vs.systemTime).toBe(T0 + 5);
    expect(vs.simulationTime).toBe(T0 + 2);
    expect(vs.simulationSpeed).toBe(0.5);
    expect(vs.animationSpeed).toBe(3);
  });
});
