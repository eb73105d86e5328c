/** Wind trail particles advected through a sampled forecast field.
 *
 * Each animation tick moves every particle by the local wind vector at
 * the current simulation time, scaled by the animation speed. Particles
 * leaving the bbox respawn at a fresh position, so the map stays evenly
 * populated. The server ships fields, not particle positions; all the
 * motion happens client-side.
 */

import { sample, type WindField } from "./windfield.js";

export interface Particle {
  lon: number;
  lat: number;
  /** Recent positions, newest last; capped for rendering. */
  trail: [number, number][];
}

/** Degrees per meter of wind travel. The map is a qualitative view and
 * treats lon/lat as a flat plane: a uniform field advects every particle
 * by the identical displacement, whatever its position. */
const DEG_PER_M = 1 / 111_320;

export class TrailSet {
  readonly particles: Particle[] = [];
  private readonly rnd: () => number;

  constructor(
    public field: WindField,
    count: number,
    rnd: () => number = Math.random,
    private readonly trailLength = 24,
  ) {
    this.rnd = rnd;
    for (let i = 0; i < count; i++) {
      this.particles.push(this.spawn());
    }
  }

  private spawn(): Particle {
    const [lonMin, lonMax, latMin, latMax] = this.field.bbox;
    const lon = lonMin + this.rnd() * (lonMax - lonMin);
    const lat = latMin + this.rnd() * (latMax - latMin);
    return { lon, lat, trail: [[lon, lat]] };
  }

  /** Advance every particle by dt seconds of animation. A zero animation
   * speed freezes the map even while simulation time keeps running. */
  step(dt: number, simulationTime: number, animationSpeed: number): void {
    if (animationSpeed === 0 || dt === 0) return;
    const f = this.field;
    const at = Math.min(
      Math.max(simulationTime, f.times[0]),
      f.times[f.times.length - 1],
    );
    const [lonMin, lonMax, latMin, latMax] = f.bbox;
    for (let i = 0; i < this.particles.length; i++) {
      const p = this.particles[i];
      const [u, v] = sample(f, p.lon, p.lat, at);
      const scale = dt * animationSpeed * DEG_PER_M;
      p.lon += u * scale;
      p.lat += v * scale;
      if (p.lon < lonMin || p.lon > lonMax || p.lat < latMin || p.lat > latMax) {
        this.particles[i] = this.spawn();
        continue;
      }
      p.trail.push([p.lon, p.lat]);
      if (p.trail.length > this.trailLength) p.trail.shift();
    }
  }
}
