/** Canned HTTP server the tests run the dashboard against.
 *
 * It mimics the real API's shapes and error payloads with deterministic
 * synthetic data, no simulator or store behind it. The stream endpoint
 * follows a scripted plan of segments so tests can stage disconnects,
 * overflow kicks, and replayed frames.
 */

import http from "node:http";
import type { AddressInfo } from "node:net";
import type {
  StreamFramePayload,
  TimePayload,
} from "../src/types.js";

/** 2022-02-13T00:00:00Z, matching the backend's default epoch. */
export const T0 = 1644710400;

export const PARAMS = [
  "WTUR.ActivePower",
  "WROT.RotorRPM",
  "WMET.WindSpeed",
  "WYAW.YawAngle",
];

const BOUNDS: Record<string, [number, number, string]> = {
  "WTUR.ActivePower": [-100, 3000, "kW"],
  "WROT.RotorRPM": [0, 20, "rpm"],
  "WMET.WindSpeed": [0, 60, "m/s"],
  "WYAW.YawAngle": [0, 360, "deg"],
};

export function iso(epoch: number): string {
  return new Date(epoch * 1000).toISOString();
}

/** Deterministic synthetic value for (instant, column). */
export function syntheticValue(t: number, col: number): number {
  return col * 100 + ((t - T0) % 600) * 0.5;
}

export interface StreamSegment {
  frames: StreamFramePayload[];
  /** close: drop the connection; overflow: send the kick then close;
   * hold: leave the connection open. */
  end: "close" | "overflow" | "hold";
}

export function frameAt(seq: number, params = PARAMS): StreamFramePayload {
  const t = T0 + seq;
  return {
    seq,
    ts: iso(t),
    values: params.map((_, col) => syntheticValue(t, col)),
    padded: params.map(() => false),
  };
}

export class FixtureServer {
  requests: { method: string; path: string }[] = [];
  streamPlan: StreamSegment[] = [];
  /** Mutable clock; PUT /time edits it like the real server would. */
  clock = {
    realTime: T0 + 1000,
    systemTime: T0 + 900,
    simulationTime: T0 + 900,
    simulationSpeed: 1,
    animationSpeed: 1,
  };
  /** Windfield text served verbatim; null -> 404 NoFieldAvailable. */
  fieldText: string | null = null;

  private server: http.Server;
  private open = new Set<http.ServerResponse>();
  base = "";

  constructor() {
    this.server = http.createServer((req, res) => this.route(req, res));
  }

  start(): Promise<string> {
    return new Promise((resolve) => {
      this.server.listen(0, "127.0.0.1", () => {
        const addr = this.server.address() as AddressInfo;
        this.base = `http://127.0.0.1:${addr.port}`;
        resolve(this.base);
      });
    });
  }

  stop(): Promise<void> {
    for (const res of this.open) res.destroy();
    this.open.clear();
    return new Promise((resolve) => this.server.close(() => resolve()));
  }

  count(pathPrefix: string): number {
    return this.requests.filter((r) => r.path.startsWith(pathPrefix)).length;
  }

  private timePayload(): TimePayload {
    return {
      real_time: iso(this.clock.realTime),
      system_time: iso(this.clock.systemTime),
      simulation_time: iso(this.clock.simulationTime),
      simulation_speed: this.clock.simulationSpeed,
      animation_speed: this.clock.animationSpeed,
    };
  }

  private route(req: http.IncomingMessage, res: http.ServerResponse): void {
    const url = new URL(req.url ?? "/", this.base);
    this.requests.push({ method: req.method ?? "GET", path: url.pathname });
    const send = (status: number, body: unknown) => {
      const text = JSON.stringify(body);
      res.writeHead(status, { "Content-Type": "application/json" });
      res.end(text);
    };
    const fail = (status: number, error: string, message: string) =>
      send(status, { error, message });

    switch (`${req.method} ${url.pathname}`) {
      case "GET /api/v1/catalog":
        send(200, {
          parameters: PARAMS.map((id) => ({
            id,
            node: id.split(".")[0],
            unit: BOUNDS[id][2],
            kind: "analog",
            lower_bound: BOUNDS[id][0],
            upper_bound: BOUNDS[id][1],
            codes: null,
            forecast_rank: null,
          })),
          forecast_set: PARAMS,
        });
        return;

      case "GET /api/v1/time":
        send(200, this.timePayload());
        return;

      case "PUT /api/v1/time": {
        let body = "";
        req.on("data", (c) => (body += c));
        req.on("end", () => {
          const doc = JSON.parse(body || "{}") as Record<string, unknown>;
          if ("system_time" in doc) {
            const t = Date.parse(String(doc.system_time)) / 1000;
            if (t > this.clock.realTime) {
              fail(400, "InvalidTime", "system time cannot lead real time");
              return;
            }
            this.clock.systemTime = t;
          }
          if ("simulation_time" in doc) {
            this.clock.simulationTime =
              Date.parse(String(doc.simulation_time)) / 1000;
          }
          if ("simulation_speed" in doc) {
            this.clock.simulationSpeed = Number(doc.simulation_speed);
          }
          if ("animation_speed" in doc) {
            this.clock.animationSpeed = Number(doc.animation_speed);
          }
          send(200, this.timePayload());
        });
        return;
      }

      case "GET /api/v1/historic": {
        const from = Date.parse(url.searchParams.get("from") ?? "") / 1000;
        const to = Date.parse(url.searchParams.get("to") ?? "") / 1000;
        const step = Number(url.searchParams.get("step") ?? "1");
        const params = (url.searchParams.get("params") ?? PARAMS.join(","))
          .split(",")
          .filter(Boolean);
        if (!Number.isFinite(from) || !Number.isFinite(to)) {
          fail(400, "InvalidRange", "historic needs from and to");
          return;
        }
        if (to > this.clock.systemTime) {
          fail(400, "FutureRange", "to is ahead of system time");
          return;
        }
        const times: number[] = [];
        for (let t = from; t <= to + 1e-9; t += step) times.push(t);
        send(200, {
          start: iso(from),
          step,
          parameters: params,
          times: times.map(iso),
          values: times.map((t) =>
            params.map((_, col) => syntheticValue(t, col)),
          ),
          padded: times.map(() => params.map(() => false)),
          missing: times.map(() => params.map(() => false)),
        });
        return;
      }

      case "GET /api/v1/forecast": {
        const model = url.searchParams.get("model");
        if (!model || model === "missing") {
          fail(404, "UnknownModel", `no loaded model named ${model}`);
          return;
        }
        const atIso = url.searchParams.get("at");
        const at = atIso
          ? Date.parse(atIso) / 1000
          : this.clock.systemTime;
        const k = 5;
        send(200, {
          model,
          kind: "persistence",
          label: model,
          timescale: "seconds",
          at: iso(at),
          times: Array.from({ length: k }, (_, i) => iso(at + i + 1)),
          parameters: PARAMS,
          values: Array.from({ length: k }, (_, row) =>
            PARAMS.map((_, col) => syntheticValue(at, col) + row),
          ),
          provenance: { init: "fixture" },
          norm: null,
        });
        return;
      }

      case "GET /api/v1/windfield":
        if (this.fieldText === null) {
          fail(404, "NoFieldAvailable", "no weather endpoint configured");
          return;
        }
        res.writeHead(200, { "Content-Type": "text/plain" });
        res.end(this.fieldText);
        return;

      case "GET /api/v1/stream": {
        res.writeHead(200, {
          "Content-Type": "text/event-stream",
          "Cache-Control": "no-cache",
        });
        this.open.add(res);
        const segment = this.streamPlan.shift();
        if (!segment) return; // hold silently
        for (const frame of segment.frames) {
          res.write(`data: ${JSON.stringify(frame)}\n\n`);
        }
        if (segment.end === "overflow") {
          res.write("event: overflow\ndata: {}\n\n");
          res.end();
        } else if (segment.end === "close") {
          res.end();
        }
        return;
      }

      default:
        fail(404, "NotFound", url.pathname);
    }
  }
}

/** windfield/1 text for a constant (u, v) over a small grid. */
export function uniformFieldText(
  u: number,
  v: number,
  opts: {
    bbox?: [number, number, number, number];
    nx?: number;
    ny?: number;
    hours?: number;
    stale?: boolean;
  } = {},
): string {
  const bbox = opts.bbox ?? [3, 7, 59.5, 61];
  const nx = opts.nx ?? 5;
  const ny = opts.ny ?? 3;
  const hours = opts.hours ?? 2;
  const times = Array.from({ length: hours }, (_, i) => iso(T0 + 3600 * i));
  const plane = (x: number) => Array(nx * ny).fill(x).join(" ");
  const lines = [
    "windfield/1",
    "source fixture",
    `issued_at ${iso(T0)}`,
    `stale ${opts.stale ? 1 : 0}`,
    `bbox ${bbox.join(" ")}`,
    `grid ${nx} ${ny}`,
    `times ${times.join(" ")}`,
  ];
  for (const t of times) {
    lines.push(`block ${t}`, `u ${plane(u)}`, `v ${plane(v)}`);
  }
  return lines.join("\n") + "\n";
}
