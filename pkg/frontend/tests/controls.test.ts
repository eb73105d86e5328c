import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { TwinClient } from "../src/api.js";
import { TimeControls } from "../src/controls.js";
import { ViewState } from "../src/state.js";
import { epochToIso } from "../src/time.js";
import { FixtureServer, PARAMS, T0 } from "./fixture.js";

let server: FixtureServer;
let client: TwinClient;
let state: ViewState;
let controls: TimeControls;

beforeEach(async () => {
  server = new FixtureServer();
  client = new TwinClient(await server.start());
  state = new ViewState();
  state.applyTime(await client.time());
  controls = new TimeControls(client, state);
});

afterEach(async () => {
  await server.stop();
});

describe("TimeControls", () => {
  it("scrubbing to a past instant re-fetches the historic range", async () => {
    // wired the way the app wires it: a landed scrub pulls fresh history
    controls.onScrubbed = (simT) => {
      void client.historic(
        epochToIso(simT - 60),
        epochToIso(simT),
        PARAMS,
        1,
      );
    };
    const fetchesBefore = server.count("/api/v1/historic");
    const ok = await controls.scrub(T0 + 300);
    expect(ok).toBe(true);
    expect(state.simulationTime).toBe(T0 + 300);
    await new Promise((r) => setTimeout(r, 50));
    expect(server.count("/api/v1/historic")).toBe(fetchesBefore + 1);
  });

  it("adopts the server's echoed state, not an optimistic guess", async () => {
    await controls.setSpeed(0.1); // slow motion
    expect(state.simulationSpeed).toBe(0.1);
    expect(server.clock.simulationSpeed).toBe(0.1);
    await controls.pause();
    expect(state.simulationSpeed).toBe(0);
    await controls.play();
    expect(state.simulationSpeed).toBe(1);
  });

  it("snaps back when the server refuses a future system time", async () => {
    const errors: string[] = [];
    controls.onError = (m) => errors.push(m);
    const sysBefore = state.systemTime;

    const ok = await controls.pinSystemTime(server.clock.realTime + 9999);
    expect(ok).toBe(false);
    expect(errors).toHaveLength(1);
    expect(errors[0]).toContain("InvalidTime");
    // mirror re-read from the server, still the authoritative old value
    expect(state.systemTime).toBe(sysBefore);
  });

  it("pins system time into the past for replays", async () => {
    const ok = await controls.pinSystemTime(T0 + 100);
    expect(ok).toBe(true);
    expect(state.systemTime).toBe(T0 + 100);
    expect(server.clock.systemTime).toBe(T0 + 100);
  });

  it("animation speed changes round-trip without touching the clock", async () => {
    const simBefore = state.simulationTime;
    await controls.setAnimationSpeed(0);
    expect(state.animationSpeed).toBe(0);
    expect(state.simulationTime).toBe(simBefore);
  });
});
