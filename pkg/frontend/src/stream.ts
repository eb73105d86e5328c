/** Server-sent-events client with reconnect and duplicate suppression.
 *
 * The server numbers frames consecutively per connection scope and never
 * backfills, so a reconnect can replay instants the client already
 * plotted. Frames are deduplicated on (seq, ts): a frame is delivered at
 * most once no matter how often the connection drops and resumes.
 * Implemented over fetch + ReadableStream rather than EventSource so the
 * same code runs in the browser and under Node tests.
 */

import type { StreamFramePayload } from "./types.js";

export interface StreamOptions {
  /** Delay before reconnecting after a drop, ms. */
  retryMs?: number;
  /** Reconnect attempts before giving up (Infinity by default). */
  maxRetries?: number;
  fetchFn?: (url: string, init?: RequestInit) => Promise<Response>;
  /** Called when the connection state changes, for a status badge. */
  onStatus?: (state: "connecting" | "open" | "closed") => void;
}

const SEEN_LIMIT = 4096; // remembered (seq, ts) pairs; plenty for one view

export class StreamClient {
  private stopped = false;
  private controller: AbortController | null = null;
  private seen = new Map<number, string>();
  private retries = 0;

  constructor(
    private readonly url: string,
    private readonly onFrame: (frame: StreamFramePayload) => void,
    private readonly opts: StreamOptions = {},
  ) {}

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
    this.opts.onStatus?.("closed");
  }

  /** One connection attempt after another until stop() or retry budget. */
  private async loop(): Promise<void> {
    const retryMs = this.opts.retryMs ?? 1000;
    const maxRetries = this.opts.maxRetries ?? Infinity;
    while (!this.stopped && this.retries <= maxRetries) {
      try {
        await this.readOnce();
      } catch {
        // drop and retry below
      }
      if (this.stopped) break;
      this.retries += 1;
      if (this.retries > maxRetries) break;
      await new Promise((r) => setTimeout(r, retryMs));
    }
    this.opts.onStatus?.("closed");
  }

  private async readOnce(): Promise<void> {
    this.opts.onStatus?.("connecting");
    this.controller = new AbortController();
    const fetchFn = this.opts.fetchFn ?? ((u: string, i?: RequestInit) => fetch(u, i));
    const res = await fetchFn(this.url, {
      signal: this.controller.signal,
      headers: { Accept: "text/event-stream" },
    });
    if (!res.ok || !res.body) {
      throw new Error(`stream returned ${res.status}`);
    }
    this.opts.onStatus?.("open");
    this.retries = 0;
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buf = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return; // server closed; outer loop reconnects
      buf += decoder.decode(value, { stream: true });
      let cut;
      while ((cut = buf.indexOf("\n\n")) >= 0) {
        const event = buf.slice(0, cut);
        buf = buf.slice(cut + 2);
        this.handleEvent(event);
      }
    }
  }

  private handleEvent(event: string): void {
    // An overflow event means the server dropped us as a slow consumer;
    // treat it like a disconnect and let the reconnect logic recover.
    if (event.startsWith("event: overflow")) {
      this.controller?.abort();
      return;
    }
    for (const line of event.split("\n")) {
      if (!line.startsWith("data: ")) continue; // comments, pings
      let frame: StreamFramePayload;
      try {
        frame = JSON.parse(line.slice(6)) as StreamFramePayload;
      } catch {
        continue;
      }
      if (this.seen.get(frame.seq) === frame.ts) continue; // replayed
      this.seen.set(frame.seq, frame.ts);
      if (this.seen.size > SEEN_LIMIT) {
        const oldest = this.seen.keys().next().value as number;
        this.seen.delete(oldest);
      }
      this.onFrame(frame);
    }
  }
}
