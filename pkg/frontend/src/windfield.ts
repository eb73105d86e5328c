/** Parse and sample windfield/1 documents.
 *
 * The sampling math mirrors the server exactly: bilinear over the node
 * grid, linear between the bracketing forecast instants, exact at the
 * nodes. Out-of-domain queries throw rather than extrapolate; callers
 * that animate (the trail map) clamp time and respawn particles instead.
 */

import { isoToEpoch } from "./time.js";

export interface WindField {
  source: string;
  issuedAt: number;
  stale: boolean;
  /** lon_min, lon_max, lat_min, lat_max */
  bbox: [number, number, number, number];
  nx: number;
  ny: number;
  /** Epoch seconds, ascending. */
  times: number[];
  /** [time][ny*nx] row-major, south row first. */
  u: Float64Array[];
  v: Float64Array[];
}

export class FieldParseError extends Error {}
export class OutOfDomain extends Error {}

const TAG = "windfield/1";

export function parseField(text: string): WindField {
  const lines = text
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0 || lines[0] !== TAG) {
    throw new FieldParseError(`not a ${TAG} document`);
  }
  const head: Record<string, string> = {};
  let i = 1;
  while (i < lines.length && !lines[i].startsWith("block ")) {
    const sp = lines[i].indexOf(" ");
    if (sp < 0) throw new FieldParseError(`bad header line: ${lines[i]}`);
    head[lines[i].slice(0, sp)] = lines[i].slice(sp + 1).trim();
    i += 1;
  }
  const need = ["source", "issued_at", "bbox", "grid", "times"];
  for (const key of need) {
    if (!(key in head)) throw new FieldParseError(`missing header ${key}`);
  }
  const bboxParts = head.bbox.split(/\s+/).map(Number);
  if (bboxParts.length !== 4 || bboxParts.some(Number.isNaN)) {
    throw new FieldParseError(`bad bbox ${head.bbox}`);
  }
  const [nx, ny] = head.grid.split(/\s+/).map(Number);
  if (!Number.isInteger(nx) || !Number.isInteger(ny) || nx < 2 || ny < 2) {
    throw new FieldParseError(`bad grid ${head.grid}`);
  }
  const times = head.times.split(/\s+/).map(isoToEpoch);

  const u: Float64Array[] = [];
  const v: Float64Array[] = [];
  for (let k = 0; k < times.length; k++) {
    if (i >= lines.length || !lines[i].startsWith("block ")) {
      throw new FieldParseError(`missing block ${k}`);
    }
    i += 1;
    for (const [name, dest] of [
      ["u", u],
      ["v", v],
    ] as const) {
      if (i >= lines.length || !lines[i].startsWith(name + " ")) {
        throw new FieldParseError(`missing ${name} plane in block ${k}`);
      }
      const nums = lines[i].slice(2).split(/\s+/).map(Number);
      if (nums.length !== nx * ny || nums.some(Number.isNaN)) {
        throw new FieldParseError(
          `plane ${name}[${k}] has ${nums.length} values, wanted ${nx * ny}`,
        );
      }
      dest.push(Float64Array.from(nums));
      i += 1;
    }
  }

  return {
    source: head.source,
    issuedAt: isoToEpoch(head.issued_at),
    stale: head.stale === "1",
    bbox: bboxParts as [number, number, number, number],
    nx,
    ny,
    times,
    u,
    v,
  };
}

/** (u, v) m/s at a point and epoch-second instant. */
export function sample(
  f: WindField,
  lon: number,
  lat: number,
  at: number,
): [number, number] {
  const [lonMin, lonMax, latMin, latMax] = f.bbox;
  if (lon < lonMin || lon > lonMax || lat < latMin || lat > latMax) {
    throw new OutOfDomain(`(${lon}, ${lat}) outside bbox ${f.bbox}`);
  }
  if (at < f.times[0] || at > f.times[f.times.length - 1]) {
    throw new OutOfDomain(`instant ${at} outside forecast span`);
  }

  const x = ((lon - lonMin) / (lonMax - lonMin)) * (f.nx - 1);
  const y = ((lat - latMin) / (latMax - latMin)) * (f.ny - 1);
  const ix = Math.min(Math.floor(x), f.nx - 2);
  const iy = Math.min(Math.floor(y), f.ny - 2);
  const fx = x - ix;
  const fy = y - iy;

  let it = f.times.length - 1;
  while (it > 0 && f.times[it] > at) it -= 1;
  if (it >= f.times.length - 1) it = Math.max(f.times.length - 2, 0);
  const ft =
    f.times.length > 1 ? (at - f.times[it]) / (f.times[it + 1] - f.times[it]) : 0;

  const plane = (arr: Float64Array[], k: number): number => {
    const c00 = arr[k][iy * f.nx + ix];
    const c01 = arr[k][iy * f.nx + ix + 1];
    const c10 = arr[k][(iy + 1) * f.nx + ix];
    const c11 = arr[k][(iy + 1) * f.nx + ix + 1];
    const bottom = c00 * (1 - fx) + c01 * fx;
    const top = c10 * (1 - fx) + c11 * fx;
    return bottom * (1 - fy) + top * fy;
  };
  const component = (arr: Float64Array[]): number => {
    const first = plane(arr, it);
    return ft === 0 ? first : first * (1 - ft) + plane(arr, it + 1) * ft;
  };
  return [component(f.u), component(f.v)];
}
