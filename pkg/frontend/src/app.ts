/** Dashboard bootstrap: wires the client, state, panels, and timers.
 *
 * Serve the built bundle next to the API (or pass ?api=http://host:port)
 * and open index.html. The page keeps a single stream subscription for
 * the selected parameters, mirrors the server clock once a second, and
 * repaints gauges and graph on every frame or clock change.
 */

import { ApiError, TwinClient } from "./api.js";
import { StreamClient } from "./stream.js";
import { ViewState } from "./state.js";
import { TimeControls } from "./controls.js";
import {
  DEFAULT_GAUGES,
  catalogIndex,
  gaugeModel,
  type GaugeModel,
} from "./gauges.js";
import { clampRange, composeGraph, stepForSpan } from "./graph.js";
import { parseField, type WindField } from "./windfield.js";
import { TrailSet } from "./trails.js";
import { renderGauges, renderGraph, renderTrails } from "./render.js";
import { epochToIso } from "./time.js";
import type { ForecastPayload, ParameterInfo } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function main(): Promise<void> {
  const apiBase =
    new URLSearchParams(location.search).get("api") ?? location.origin;
  const client = new TwinClient(apiBase);
  const state = new ViewState();
  const controls = new TimeControls(client, state);

  const statusLine = el<HTMLElement>("status");
  const errorLine = el<HTMLElement>("error");
  controls.onError = (msg) => {
    errorLine.textContent = msg;
    setTimeout(() => (errorLine.textContent = ""), 4000);
  };

  const catalog = await client.catalog();
  const byId = catalogIndex(catalog);
  state.selected = DEFAULT_GAUGES.filter((id) => byId.has(id));
  state.applyTime(await client.time());
  state.follow(300);

  // -- historic backfill for the visible range --------------------------
  let fetchSeq = 0;
  async function refetchHistory(): Promise<void> {
    const seq = ++fetchSeq;
    const [from, to] = clampRange(
      state.range.from,
      state.range.to,
      state.systemTime,
    );
    if (to <= from) return;
    try {
      const fs = await client.historic(
        epochToIso(from),
        epochToIso(to),
        state.selected,
        stepForSpan(to - from),
      );
      if (seq === fetchSeq) state.buffer.addFrameSeries(fs);
    } catch (err) {
      if (err instanceof ApiError && err.code === "FutureRange") return;
      throw err;
    }
  }

  // -- live stream -------------------------------------------------------
  const stream = new StreamClient(
    client.streamUrl(state.selected),
    (frame) => state.buffer.addStreamFrame(frame, state.selected),
    { onStatus: (s) => (statusLine.textContent = s) },
  );
  stream.start();

  // -- forecast overlay ---------------------------------------------------
  let forecast: ForecastPayload | null = null;
  const modelSelect = el<HTMLSelectElement>("model");
  async function refreshForecast(): Promise<void> {
    const name = modelSelect.value;
    state.model = name || null;
    if (!state.model) {
      forecast = null;
      return;
    }
    try {
      forecast = await client.forecast(state.model);
    } catch (err) {
      forecast = null;
      if (err instanceof ApiError) controls.onError?.(err.message);
    }
  }
  modelSelect.addEventListener("change", () => void refreshForecast());

  // -- trail map ----------------------------------------------------------
  let trails: TrailSet | null = null;
  let field: WindField | null = null;
  const trailCanvas = el<HTMLCanvasElement>("trails");
  async function loadField(): Promise<void> {
    try {
      field = parseField(await client.windfieldText());
      trails = new TrailSet(field, 160);
      el<HTMLElement>("trail-placeholder").style.display = "none";
    } catch {
      field = null;
      trails = null; // placeholder stays; panel is optional
    }
  }
  await loadField();
  setInterval(() => void loadField(), 120_000);

  // -- controls -----------------------------------------------------------
  el<HTMLButtonElement>("play").onclick = () => void controls.play();
  el<HTMLButtonElement>("pause").onclick = () => void controls.pause();
  const speedInput = el<HTMLInputElement>("speed");
  speedInput.onchange = () =>
    void controls.setSpeed(Number(speedInput.value) || 1);
  const scrubInput = el<HTMLInputElement>("scrub");
  scrubInput.onchange = () => {
    const offset = Number(scrubInput.value); // seconds back from system time
    state.liveFollow = offset === 0;
    void controls.scrub(state.systemTime - offset);
  };
  controls.onScrubbed = (simT) => {
    if (!state.liveFollow) {
      const span = state.range.to - state.range.from || 300;
      state.setRange(simT - span, simT);
    }
    void refetchHistory();
    void refreshForecast();
  };

  // -- timers ---------------------------------------------------------------
  setInterval(async () => {
    try {
      state.applyTime(await client.time());
    } catch {
      return; // keep the last mirror while the server blips
    }
    if (state.liveFollow) void refetchHistory();
  }, 1000);

  const gaugePanel = el<HTMLElement>("gauges");
  const graphCanvas = el<HTMLCanvasElement>("graph");
  let lastTick = performance.now();
  function paint(now: number): void {
    const dt = Math.min((now - lastTick) / 1000, 0.1);
    lastTick = now;

    const models: GaugeModel[] = [];
    for (const id of state.selected) {
      const info = byId.get(id) as ParameterInfo;
      models.push(
        gaugeModel(info, state.buffer.latest(id), state.systemTime, 1),
      );
    }
    renderGauges(gaugePanel, models);
    renderGraph(
      graphCanvas,
      composeGraph(
        state.buffer,
        state.selected,
        state.range,
        state.simulationTime,
        forecast,
      ),
    );
    if (trails && field) {
      trails.step(dt, state.simulationTime, state.animationSpeed);
      renderTrails(trailCanvas, trails, field.stale);
    }
    requestAnimationFrame(paint);
  }
  await refetchHistory();
  requestAnimationFrame(paint);
}

main().catch((err) => {
  document.body.insertAdjacentText(
    "beforeend",
    `failed to start: ${err instanceof Error ? err.message : err}`,
  );
});
