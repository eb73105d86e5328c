import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { StreamClient } from "../src/stream.js";
import type { StreamFramePayload } from "../src/types.js";
import { FixtureServer, frameAt } from "./fixture.js";

let server: FixtureServer;

beforeEach(async () => {
  server = new FixtureServer();
  await server.start();
});

afterEach(async () => {
  await server.stop();
});

function collect(): { frames: StreamFramePayload[]; client: StreamClient } {
  const frames: StreamFramePayload[] = [];
  const client = new StreamClient(
    `${server.base}/api/v1/stream`,
    (f) => frames.push(f),
    { retryMs: 20 },
  );
  return { frames, client };
}

async function until(cond: () => boolean, ms = 3000): Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > ms) throw new Error("condition never held");
    await new Promise((r) => setTimeout(r, 10));
  }
}

describe("StreamClient", () => {
  it("delivers frames in order", async () => {
    server.streamPlan = [
      { frames: [1, 2, 3].map((s) => frameAt(s)), end: "hold" },
    ];
    const { frames, client } = collect();
    client.start();
    await until(() => frames.length === 3);
    client.stop();
    expect(frames.map((f) => f.seq)).toEqual([1, 2, 3]);
    expect(frames[0].values).toHaveLength(4);
  });

  it("reconnects after a drop without duplicating replayed frames", async () => {
    // The second connection replays 3..5 before carrying on to 8, the
    // way a resumed subscription replays instants already delivered.
    server.streamPlan = [
      { frames: [1, 2, 3, 4, 5].map((s) => frameAt(s)), end: "close" },
      { frames: [3, 4, 5, 6, 7, 8].map((s) => frameAt(s)), end: "hold" },
    ];
    const { frames, client } = collect();
    client.start();
    await until(() => frames.some((f) => f.seq === 8));
    client.stop();
    expect(frames.map((f) => f.seq)).toEqual([1, 2, 3, 4, 5, 6, 7, 8]);
  });

  it("treats an overflow kick as a drop and resumes cleanly", async () => {
    server.streamPlan = [
      { frames: [1, 2].map((s) => frameAt(s)), end: "overflow" },
      { frames: [2, 3, 4].map((s) => frameAt(s)), end: "hold" },
    ];
    const { frames, client } = collect();
    client.start();
    await until(() => frames.some((f) => f.seq === 4));
    client.stop();
    expect(frames.map((f) => f.seq)).toEqual([1, 2, 3, 4]);
  });

  it("reports connection state transitions", async () => {
    server.streamPlan = [{ frames: [frameAt(1)], end: "hold" }];
    const states: string[] = [];
    const client = new StreamClient(
      `${server.base}/api/v1/stream`,
      () => undefined,
      { retryMs: 20, onStatus: (s) => states.push(s) },
    );
    client.start();
    await until(() => states.includes("open"));
    client.stop();
    await until(() => states.includes("closed"));
    expect(states[0]).toBe("connecting");
  });
});
