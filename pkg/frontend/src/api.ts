/** Typed client for the server's /api/v1 endpoints.
 *
 * Every method resolves to the parsed payload or rejects with ApiError
 * carrying the server's stable error code (InvalidRange, FutureRange,
 * InvalidTime, ...), so callers can branch on `code` instead of
 * matching message text.
 */

import type {
  CatalogPayload,
  ErrorPayload,
  ForecastPayload,
  FrameSeriesPayload,
  TimePatch,
  TimePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class TwinClient {
  constructor(
    public readonly base: string,
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.base}/api/v1${path}`, init);
    if (!res.ok) {
      let code = `HTTP${res.status}`;
      let message = res.statusText;
      try {
        const body = (await res.json()) as ErrorPayload;
        if (body.error) {
          code = body.error;
          message = body.message;
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(code, message, res.status);
    }
    return (await res.json()) as T;
  }

  catalog(): Promise<CatalogPayload> {
    return this.request<CatalogPayload>("/catalog");
  }

  time(): Promise<TimePayload> {
    return this.request<TimePayload>("/time");
  }

  setTime(patch: TimePatch): Promise<TimePayload> {
    return this.request<TimePayload>("/time", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(patch),
    });
  }

  historic(
    from: string,
    to: string,
    params?: string[],
    step?: number,
  ): Promise<FrameSeriesPayload> {
    const q = new URLSearchParams({ from, to });
    if (params && params.length) q.set("params", params.join(","));
    if (step !== undefined) q.set("step", String(step));
    return this.request<FrameSeriesPayload>(`/historic?${q}`);
  }

  forecast(model: string, at?: string): Promise<ForecastPayload> {
    const q = new URLSearchParams({ model });
    if (at !== undefined) q.set("at", at);
    return this.request<ForecastPayload>(`/forecast?${q}`);
  }

  ingest(body: string, token: string): Promise<Record<string, number>> {
    return this.request<Record<string, number>>("/ingest", {
      method: "POST",
      headers: {
        "Content-Type": "text/plain",
        Authorization: `Bearer ${token}`,
      },
      body,
    });
  }

  /** Raw windfield/1 text; parse with windfield.parseField. */
  async windfieldText(bbox?: [number, number, number, number]): Promise<string> {
    const q = new URLSearchParams();
    if (bbox) q.set("bbox", bbox.join(","));
    const suffix = q.size ? `?${q}` : "";
    const res = await this.fetchFn(`${this.base}/api/v1/windfield${suffix}`);
    if (!res.ok) {
      let code = `HTTP${res.status}`;
      let message = res.statusText;
      try {
        const body = (await res.json()) as ErrorPayload;
        if (body.error) {
          code = body.error;
          message = body.message;
        }
      } catch {
        // fall through with the status line
      }
      throw new ApiError(code, message, res.status);
    }
    return res.text();
  }

  streamUrl(params?: string[]): string {
    const q = new URLSearchParams();
    if (params && params.length) q.set("params", params.join(","));
    const suffix = q.size ? `?${q}` : "";
    return `${this.base}/api/v1/stream${suffix}`;
  }
}
