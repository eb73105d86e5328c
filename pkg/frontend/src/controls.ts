/** Time controls: play, pause, speed, scrub.
 *
 * Every action round-trips through PUT /time and the UI adopts whatever
 * the server echoes back, never its own optimistic guess. A rejected
 * change (pinning system time into the future, say) surfaces the error
 * inline and re-reads the clock so the controls snap back to reality.
 */

import { ApiError, type TwinClient } from "./api.js";
import { epochToIso } from "./time.js";
import type { ViewState } from "./state.js";
import type { TimePatch } from "./types.js";

export class TimeControls {
  /** Fired after a scrub lands, with the new simulation time; the app
   * hooks this to re-fetch the historic range around the new cursor. */
  onScrubbed: ((simulationTime: number) => void) | null = null;
  onError: ((message: string) => void) | null = null;

  constructor(
    private readonly client: TwinClient,
    private readonly state: ViewState,
  ) {}

  private async apply(patch: TimePatch): Promise<boolean> {
    try {
      this.state.applyTime(await this.client.setTime(patch));
      return true;
    } catch (err) {
      const message =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.onError?.(message);
      try {
        this.state.applyTime(await this.client.time()); // snap back
      } catch {
        // server unreachable; leave the stale mirror rather than invent
      }
      return false;
    }
  }

  pause(): Promise<boolean> {
    return this.apply({ simulation_speed: 0 });
  }

  play(speed = 1): Promise<boolean> {
    return this.apply({ simulation_speed: speed });
  }

  setSpeed(speed: number): Promise<boolean> {
    return this.apply({ simulation_speed: speed });
  }

  /** Drag the viewing cursor to an instant (epoch seconds). */
  async scrub(to: number): Promise<boolean> {
    const ok = await this.apply({ simulation_time: epochToIso(to) });
    if (ok) this.onScrubbed?.(this.state.simulationTime);
    return ok;
  }

  /** Pin the causality clock into the past (replays). The server refuses
   * future instants; the mirror snaps back when that happens. */
  pinSystemTime(to: number): Promise<boolean> {
    return this.apply({ system_time: epochToIso(to) });
  }

  setAnimationSpeed(speed: number): Promise<boolean> {
    return this.apply({ animation_speed: speed });
  }
}
