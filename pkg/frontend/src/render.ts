/** Canvas and DOM painting. Everything here is write-only presentation;
 * the models it draws are computed (and tested) elsewhere. */

import type { GaugeModel } from "./gauges.js";
import type { GraphData } from "./graph.js";
import type { TrailSet } from "./trails.js";

const SERIES_COLORS = ["#2f81f7", "#d29922", "#3fb950", "#f85149", "#a371f7"];

export function renderGauges(root: HTMLElement, models: GaugeModel[]): void {
  root.replaceChildren();
  for (const g of models) {
    const cell = document.createElement("div");
    cell.className = "gauge" + (g.stale ? " stale" : "");

    const dial = document.createElement("div");
    dial.className = "dial";
    const needle = document.createElement("div");
    needle.className = "needle";
    // 0 -> -90deg (left), 1 -> +90deg (right)
    const angle = g.fraction === null ? -90 : -90 + 180 * g.fraction;
    needle.style.transform = `rotate(${angle}deg)`;
    dial.appendChild(needle);

    const label = document.createElement("div");
    label.className = "label";
    label.textContent = g.id;

    const value = document.createElement("div");
    value.className = "value";
    value.textContent =
      g.value === null ? "--" : `${g.value.toFixed(1)} ${g.unit}`;
    if (g.padded) value.textContent += " *";

    const bounds = document.createElement("div");
    bounds.className = "bounds";
    bounds.textContent = `${g.lower} .. ${g.upper}`;

    if (g.stale) {
      const badge = document.createElement("span");
      badge.className = "badge";
      badge.textContent = "stale";
      cell.appendChild(badge);
    }
    cell.append(dial, value, label, bounds);
    root.appendChild(cell);
  }
}

export function renderGraph(canvas: HTMLCanvasElement, data: GraphData): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const { from, to } = data.range;
  if (to <= from) return;
  const xOf = (t: number) => ((t - from) / (to - from)) * w;

  // shared y-scale per parameter, not across parameters
  let slot = 0;
  for (const [id, pts] of data.history) {
    const fc = data.forecast.get(id) ?? [];
    const ys = pts.map((p) => p.v).filter((v): v is number => v !== null);
    for (const p of fc) ys.push(p.v);
    if (ys.length === 0) {
      slot += 1;
      continue;
    }
    let lo = Math.min(...ys);
    let hi = Math.max(...ys);
    if (hi - lo < 1e-9) {
      lo -= 1;
      hi += 1;
    }
    const yOf = (v: number) => h - ((v - lo) / (hi - lo)) * (h - 20) - 10;
    const color = SERIES_COLORS[slot % SERIES_COLORS.length];

    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.setLineDash([]);
    ctx.beginPath();
    let pen = false;
    for (const p of pts) {
      if (p.v === null) {
        pen = false;
        continue;
      }
      const x = xOf(p.t);
      const y = yOf(p.v);
      if (pen) ctx.lineTo(x, y);
      else ctx.moveTo(x, y);
      pen = true;
    }
    ctx.stroke();

    // forecast: same hue, dashed with open markers, so predicted points
    // can never be mistaken for measurements
    if (fc.length) {
      ctx.setLineDash([4, 4]);
      ctx.beginPath();
      fc.forEach((p, i) => {
        const x = xOf(p.t);
        const y = yOf(p.v);
        if (i) ctx.lineTo(x, y);
        else ctx.moveTo(x, y);
      });
      ctx.stroke();
      ctx.setLineDash([]);
      for (const p of fc) {
        ctx.beginPath();
        ctx.arc(xOf(p.t), yOf(p.v), 2.5, 0, Math.PI * 2);
        ctx.stroke();
      }
    }
    slot += 1;
  }

  // simulation-time marker: the boundary between measured and predicted
  if (data.marker >= from && data.marker <= to) {
    ctx.strokeStyle = "#8b949e";
    ctx.setLineDash([2, 3]);
    ctx.beginPath();
    ctx.moveTo(xOf(data.marker), 0);
    ctx.lineTo(xOf(data.marker), h);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

export function renderTrails(
  canvas: HTMLCanvasElement,
  trails: TrailSet,
  stale: boolean,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width: w, height: h } = canvas;
  const [lonMin, lonMax, latMin, latMax] = trails.field.bbox;
  ctx.fillStyle = "rgba(13, 17, 23, 0.28)"; // fade old trails instead of clearing
  ctx.fillRect(0, 0, w, h);
  ctx.strokeStyle = "#58a6ff";
  ctx.lineWidth = 1;
  for (const p of trails.particles) {
    if (p.trail.length < 2) continue;
    ctx.beginPath();
    p.trail.forEach(([lon, lat], i) => {
      const x = ((lon - lonMin) / (lonMax - lonMin)) * w;
      const y = h - ((lat - latMin) / (latMax - latMin)) * h;
      if (i) ctx.lineTo(x, y);
      else ctx.moveTo(x, y);
    });
    ctx.stroke();
  }
  if (stale) {
    ctx.fillStyle = "#d29922";
    ctx.font = "12px sans-serif";
    ctx.fillText("stale field", 8, 16);
  }
}
