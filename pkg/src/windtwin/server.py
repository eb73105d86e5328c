"""HTTP hub: telemetry in; historic, stream, forecast, time, weather out.

One process owns the store, the clock trio, the loaded forecast models,
and the weather client. Clients pull history over plain GET and receive
real-time frames over a server-sent event stream; both views are causal
with respect to system time, so a record stamped in the future of the
pretended "now" can never alter a served payload.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import (
    EmptyRange, FutureRange, InvalidRange, InvalidTime, NetworkError,
    NoFieldAvailable, SubscriberOverflow, TwinError, Unauthorized,
    UnknownModel, UnknownParameter,
)
from .store import FrameSeries, TimeseriesStore, parse_records
from .timeutil import grid_ceil, grid_floor, iso_format, iso_parse
from .weather import format_field

log = logging.getLogger("windtwin.server")

API = "/api/v1"


# -- time ------------------------------------------------------------------


@dataclass(frozen=True)
class TimeState:
    """One consistent reading of the clock trio plus both speeds."""

    real_time: float
    system_time: float
    simulation_time: float
    simulation_speed: float
    animation_speed: float

    def to_dict(self) -> dict:
        return {
            "real_time": iso_format(self.real_time),
            "system_time": iso_format(self.system_time),
            "simulation_time": iso_format(self.simulation_time),
            "simulation_speed": self.simulation_speed,
            "animation_speed": self.animation_speed,
        }


class TimeConductor:
    """Authoritative time state.

    system_time trails the wall clock by a fixed offset (>= 0) so it can
    be pinned into the past for replays but never into the future.
    simulation_time is a free cursor advancing at simulation_speed times
    real time from its last anchor; animation_speed is carried for
    clients and never touches either clock.
    """

    def __init__(self, wall=time.time):
        self._wall = wall
        self._lock = threading.Lock()
        now = wall()
        self._offset = 0.0
        self._sim_value = now
        self._sim_anchor = now
        self._sim_speed = 1.0
        self._anim_speed = 1.0

    def real_time(self) -> float:
        return self._wall()

    def system_time(self) -> float:
        with self._lock:
            return self._wall() - self._offset

    def simulation_time(self) -> float:
        with self._lock:
            return self._sim_at(self._wall())

    def _sim_at(self, wall_now: float) -> float:
        return self._sim_value + (wall_now - self._sim_anchor) * self._sim_speed

    def snapshot(self) -> TimeState:
        with self._lock:
            now = self._wall()
            return TimeState(now, now - self._offset, self._sim_at(now),
                             self._sim_speed, self._anim_speed)

    def apply(self, *, system_time=None, simulation_time=None,
              simulation_speed=None, animation_speed=None) -> TimeState:
        """Atomically set any subset of the mutable fields."""
        with self._lock:
            now = self._wall()
            if system_time is not None and system_time > now + 1e-6:
                raise InvalidTime(
                    f"system time {iso_format(system_time)} is ahead of "
                    f"real time {iso_format(now)}")
            if simulation_speed is not None:
                # freeze the cursor first so past progression is kept
                self._sim_value = self._sim_at(now)
                self._sim_anchor = now
                self._sim_speed = float(simulation_speed)
            if simulation_time is not None:
                self._sim_value = float(simulation_time)
                self._sim_anchor = now
            if system_time is not None:
                self._offset = now - float(system_time)
            if animation_speed is not None:
                self._anim_speed = float(animation_speed)
            return TimeState(now, now - self._offset, self._sim_at(now),
                             self._sim_speed, self._anim_speed)


# -- streaming -------------------------------------------------------------


@dataclass(frozen=True)
class StreamFrame:
    sequence: int
    timestamp: float
    values: tuple   # float per parameter, None where missing
    padded: tuple   # bool per parameter

    def to_payload(self) -> dict:
        return {"seq": self.sequence, "ts": iso_format(self.timestamp),
                "values": list(self.values), "padded": list(self.padded)}


class Subscription:
    """One consumer's bounded, ordered frame queue."""

    def __init__(self, parameters, capacity: int):
        self.parameters = tuple(parameters)
        self._q: queue.Queue = queue.Queue(maxsize=capacity)
        self._seq = 0
        self.overflowed = False
        self.closed = False

    def _push(self, timestamp: float, values, padded) -> bool:
        self._seq += 1
        try:
            self._q.put_nowait(StreamFrame(self._seq, timestamp, values, padded))
            return True
        except queue.Full:
            self.overflowed = True
            return False

    def get(self, timeout: float | None = None) -> StreamFrame | None:
        """Next frame; None on timeout. Remaining frames drain before the
        overflow (if any) is raised, so no received frame is ever lost."""
        try:
            if timeout is None:
                return self._q.get_nowait()
            return self._q.get(timeout=timeout)
        except queue.Empty:
            if self.overflowed:
                raise SubscriberOverflow(
                    "consumer fell behind; frames were dropped") from None
            return None

    def pending(self) -> int:
        return self._q.qsize()


class StreamHub:
    """Builds one frame per grid instant per subscription from the store."""

    def __init__(self, store: TimeseriesStore, step: float = 1.0,
                 capacity: int = 512):
        self._store = store
        self.step = step
        self.capacity = capacity
        self._subs: set[Subscription] = set()
        self._lock = threading.Lock()

    def subscribe(self, parameters=None) -> Subscription:
        if parameters is None:
            parameters = self._store.catalog.ids()
        for p in parameters:
            if p not in self._store.catalog:
                raise UnknownParameter(f"cannot stream unknown parameter {p}")
        sub = Subscription(parameters, self.capacity)
        with self._lock:
            self._subs.add(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            self._subs.discard(sub)
        sub.closed = True

    def emit_instant(self, t: float) -> None:
        """Push the frame for grid instant t to every live subscription.

        A consumer whose queue is full is disconnected on the spot; the
        alternative (blocking or reordering) would stall or corrupt every
        other consumer's stream.
        """
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            fs = self._store.resample(t, t, sub.parameters, self.step)
            values = tuple(
                None if miss else float(v)
                for v, miss in zip(fs.values[0], fs.missing[0]))
            padded = tuple(bool(b) for b in fs.padded[0])
            if not sub._push(t, values, padded):
                self.unsubscribe(sub)


class FramePump:
    """Emits exactly one frame per grid instant as system time advances.

    The first poll only latches the current instant, so a freshly started
    pump never back-fills history into new subscriptions.
    """

    def __init__(self, hub: StreamHub, conductor: TimeConductor,
                 step: float = 1.0):
        self._hub = hub
        self._conductor = conductor
        self._step = step
        self._last: float | None = None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def poll(self) -> int:
        due = grid_floor(self._conductor.system_time(), self._step)
        if self._last is None:
            self._last = due
            return 0
        n = 0
        while self._last + self._step <= due + 1e-9:
            self._last += self._step
            self._hub.emit_instant(self._last)
            n += 1
        return n

    def start(self) -> None:
        def run():
            while not self._stop.is_set():
                self.poll()
                self._stop.wait(self._step / 4.0)

        self._thread = threading.Thread(target=run, daemon=True,
                                        name="windtwin-pump")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def replay_records(records, store: TimeseriesStore, hub: StreamHub,
                   conductor: TimeConductor, speed: float = 1.0,
                   step: float = 1.0, sleep=time.sleep) -> int:
    """Feed recorded telemetry through the pipeline at a pace multiple.

    Per grid instant: ingest every record due by then, pin system_time,
    emit the frame, then sleep step/speed. The emitted sequence is a pure
    function of the records; speed only rescales the sleeps, which is
    what makes replay deterministic across speeds.
    """
    if speed <= 0:
        raise InvalidRange(f"replay speed must be positive, got {speed}")
    recs = sorted(records, key=lambda r: (r.timestamp, r.parameter))
    if not recs:
        raise EmptyRange("no records to replay")
    t = grid_ceil(recs[0].timestamp, step)
    t_end = grid_floor(recs[-1].timestamp, step)
    i = 0
    emitted = 0
    while t <= t_end + 1e-9:
        j = i
        while j < len(recs) and recs[j].timestamp <= t + 1e-12:
            j += 1
        if j > i:
            store.ingest_batch(recs[i:j])
            i = j
        conductor.apply(system_time=t)
        hub.emit_instant(t)
        emitted += 1
        t += step
        if t <= t_end + 1e-9:
            sleep(step / speed)
    return emitted


# -- payload builders ------------------------------------------------------


def frame_series_payload(fs: FrameSeries) -> dict:
    values = [
        [None if m else float(v) for v, m in zip(vrow, mrow)]
        for vrow, mrow in zip(fs.values, fs.missing)
    ]
    return {
        "start": iso_format(fs.start),
        "step": fs.step,
        "parameters": list(fs.parameters),
        "times": [iso_format(t) for t in fs.times],
        "values": values,
        "padded": [[bool(b) for b in row] for row in fs.padded],
        "missing": [[bool(b) for b in row] for row in fs.missing],
    }


def catalog_payload(catalog) -> dict:
    rows = []
    for p in catalog.parameters():
        rows.append({
            "id": p.id, "node": p.node.code, "unit": p.unit, "kind": p.kind,
            "lower_bound": p.lower_bound, "upper_bound": p.upper_bound,
            "codes": sorted(p.codes) if p.codes else None,
            "forecast_rank": p.forecast_rank,
        })
    return {"parameters": rows, "forecast_set": list(catalog.forecast_set())}


_STATUS = {
    "Unauthorized": 401,
    "UnknownModel": 404,
    "NoFieldAvailable": 404,
    "NetworkError": 502,
}


# -- HTTP layer ------------------------------------------------------------


class TwinHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    # the hub object, set by TwinServer on the listening socket
    @property
    def ctx(self) -> "TwinServer":
        return self.server.ctx

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)

    # -- plumbing --

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")

    def _send_json(self, obj, status: int = 200):
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, text: str, status: int = 200,
                   ctype: str = "text/plain; charset=utf-8"):
        body = text.encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_payload(self, exc: TwinError):
        status = _STATUS.get(exc.code, 400)
        self._send_json({"error": exc.code, "message": str(exc)}, status)

    def _query(self) -> dict:
        return parse_qs(urlparse(self.path).query, keep_blank_values=True)

    def _route(self) -> str:
        return urlparse(self.path).path.rstrip("/")

    def _body(self) -> str:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length).decode("utf-8")

    def _params_arg(self, q) -> list | None:
        if "params" not in q:
            return None
        return [p for p in q["params"][0].split(",") if p]

    def _dispatch(self, handlers):
        route = self._route()
        fn = handlers.get(route)
        try:
            if fn is None:
                self._send_json({"error": "NotFound", "message": route}, 404)
            else:
                fn()
        except TwinError as exc:
            self._send_error_payload(exc)
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception:  # never leak a traceback to the wire
            log.exception("unhandled error on %s", self.path)
            try:
                self._send_json({"error": "Internal", "message": "internal error"}, 500)
            except OSError:
                pass

    # -- methods --

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Authorization, Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        self._dispatch({
            f"{API}/catalog": self._get_catalog,
            f"{API}/time": self._get_time,
            f"{API}/historic": self._get_historic,
            f"{API}/forecast": self._get_forecast,
            f"{API}/windfield": self._get_windfield,
            f"{API}/stream": self._get_stream,
        })

    def do_POST(self):
        self._dispatch({f"{API}/ingest": self._post_ingest})

    def do_PUT(self):
        self._dispatch({f"{API}/time": self._put_time})

    # -- endpoints --

    def _get_catalog(self):
        self._send_json(catalog_payload(self.ctx.store.catalog))

    def _get_time(self):
        self._send_json(self.ctx.conductor.snapshot().to_dict())

    def _put_time(self):
        try:
            doc = json.loads(self._body() or "{}")
        except json.JSONDecodeError as exc:
            raise InvalidTime(f"body is not a JSON document: {exc}") from exc
        allowed = {"system_time", "simulation_time",
                   "simulation_speed", "animation_speed"}
        unknown = set(doc) - allowed
        if unknown:
            raise InvalidTime(f"unknown time fields {sorted(unknown)}")
        kwargs = {}
        for key in ("system_time", "simulation_time"):
            if key in doc:
                kwargs[key] = iso_parse(str(doc[key]))
        for key in ("simulation_speed", "animation_speed"):
            if key in doc:
                try:
                    kwargs[key] = float(doc[key])
                except (TypeError, ValueError) as exc:
                    raise InvalidTime(f"{key} must be a number") from exc
        self._send_json(self.ctx.conductor.apply(**kwargs).to_dict())

    def _post_ingest(self):
        auth = self.headers.get("Authorization", "")
        if auth != f"Bearer {self.ctx.token}":
            raise Unauthorized("missing or wrong bearer token")
        records = parse_records(self._body(), source="ingest", origin="<body>")
        report = self.ctx.store.ingest_batch(records)
        self._send_json({
            "accepted": report.accepted,
            "rejected_unphysical": report.rejected_unphysical,
            "rejected_unknown": report.rejected_unknown,
            "deduplicated": report.deduplicated,
        })

    def _get_historic(self):
        q = self._query()
        if "from" not in q or "to" not in q:
            raise InvalidRange("historic needs from and to")
        t_from = iso_parse(q["from"][0])
        t_to = iso_parse(q["to"][0])
        step = float(q["step"][0]) if "step" in q else self.ctx.step
        sys_t = self.ctx.conductor.system_time()
        if t_to > sys_t + 1e-9:
            raise FutureRange(
                f"to {iso_format(t_to)} is ahead of system time "
                f"{iso_format(sys_t)}")
        fs = self.ctx.store.resample(t_from, t_to, self._params_arg(q), step)
        self._send_json(frame_series_payload(fs))

    def _get_forecast(self):
        q = self._query()
        if "model" not in q:
            raise UnknownModel("forecast needs a model id")
        model = self.ctx.models.get(q["model"][0])
        if model is None:
            raise UnknownModel(f"no loaded model named {q['model'][0]!r}")
        sys_t = self.ctx.conductor.system_time()
        at = iso_parse(q["at"][0]) if "at" in q else sys_t
        if at > sys_t + 1e-9:
            raise FutureRange(f"at {iso_format(at)} is ahead of system time")
        task = model.task
        window = self.ctx.store.window(at, task.m, task.parameters, task.step)
        if model.norm is not None:
            pred = model.norm.denormalize(
                model.forward(model.norm.normalize(window)))
        else:
            pred = model.forward(window)
        t0 = grid_floor(at, task.step)
        self._send_json({
            "model": q["model"][0],
            "kind": model.kind,
            "label": model.label,
            "timescale": task.timescale,
            "at": iso_format(t0),
            "times": [iso_format(t0 + (i + 1) * task.step)
                      for i in range(task.k)],
            "parameters": list(task.parameters),
            "values": [[float(v) for v in row] for row in pred],
            "provenance": model.provenance,
            "norm": model.norm.to_dict() if model.norm is not None else None,
        })

    def _get_windfield(self):
        if self.ctx.weather is None:
            raise NoFieldAvailable("no weather endpoint configured")
        q = self._query()
        bbox = None
        if "bbox" in q:
            parts = q["bbox"][0].split(",")
            if len(parts) != 4:
                raise InvalidRange("bbox must be lon_min,lon_max,lat_min,lat_max")
            bbox = tuple(float(x) for x in parts)
        hours = float(q["hours"][0]) if "hours" in q else None
        try:
            field = self.ctx.weather.fetch(hours=hours)
        except NetworkError as exc:
            raise NoFieldAvailable(str(exc)) from exc
        if bbox is not None and not field.covers(bbox):
            raise NoFieldAvailable(
                f"requested bbox {bbox} outside field bbox {field.bbox}")
        self._send_text(format_field(field))

    def _get_stream(self):
        sub = self.ctx.hub.subscribe(self._params_arg(self._query()))
        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Connection", "close")
        self.end_headers()
        try:
            while True:
                try:
                    frame = sub.get(timeout=0.5)
                except SubscriberOverflow:
                    self.wfile.write(b"event: overflow\ndata: {}\n\n")
                    break
                if frame is None:
                    self.wfile.write(b": ping\n\n")  # liveness + disconnect probe
                else:
                    data = json.dumps(frame.to_payload())
                    self.wfile.write(f"data: {data}\n\n".encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            self.ctx.hub.unsubscribe(sub)


class _Httpd(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    ctx: "TwinServer"


class TwinServer:
    """Wires the store, clock, models, and weather client into one server."""

    def __init__(self, store: TimeseriesStore, *, token: str = "let-me-in",
                 models=None, weather=None, conductor: TimeConductor | None = None,
                 step: float = 1.0, bind=("127.0.0.1", 0), capacity: int = 512):
        self.store = store
        self.token = token
        self.models = dict(models or {})
        self.weather = weather
        self.conductor = conductor or TimeConductor()
        self.step = step
        self.hub = StreamHub(store, step=step, capacity=capacity)
        self.pump = FramePump(self.hub, self.conductor, step)
        self._httpd = _Httpd(bind, TwinHandler)
        self._httpd.ctx = self
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple:
        return self._httpd.server_address

    @property
    def url(self) -> str:
        host, port = self.address[:2]
        return f"http://{host}:{port}"

    def start(self, pump: bool = False) -> "TwinServer":
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, daemon=True, name="windtwin-http")
        self._thread.start()
        if pump:
            self.pump.start()
        return self

    def stop(self) -> None:
        self.pump.stop()
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
