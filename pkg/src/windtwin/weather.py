"""Gridded wind-forecast client: fetch, cache, and interpolate fields.

A field is a rectangular lon/lat grid of 10 m u/v wind components over a
short list of forecast instants. The wire form is a line-oriented text
document (see docs/formats.md) chosen so that writer and reader round
trip values bit for bit; live services are adapted by translating into
this one format, and fixture files use it directly.
"""

from __future__ import annotations

import math
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidRange, NetworkError, OutOfDomain, ParseError, ShapeError
from .timeutil import iso_format, iso_parse

FIELD_TAG = "windfield/1"


@dataclass(frozen=True)
class WindField:
    """One forecast issue: u/v planes on a lon/lat grid at listed instants."""

    bbox: tuple          # (lon_min, lon_max, lat_min, lat_max) degrees
    times: np.ndarray    # strictly increasing epoch seconds
    u: np.ndarray        # [time x ny x nx] m/s, eastward
    v: np.ndarray        # [time x ny x nx] m/s, northward
    issued_at: float
    source: str = "fixture"
    stale: bool = False

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if self.u.ndim != 3 or self.u.shape != self.v.shape:
            raise ShapeError(f"u {self.u.shape} and v {self.v.shape} must be "
                             "matching [time x ny x nx] arrays")
        nt, ny, nx = self.u.shape
        if nx < 2 or ny < 2:
            raise ShapeError(f"grid must be at least 2 x 2, got {nx} x {ny}")
        if self.times.shape != (nt,):
            raise ShapeError(f"{self.times.size} times for {nt} planes")
        if nt == 0 or np.any(np.diff(self.times) <= 0):
            raise ShapeError("times must be non-empty and strictly increasing")
        lon_min, lon_max, lat_min, lat_max = self.bbox
        if not (lon_min < lon_max and lat_min < lat_max):
            raise ShapeError(f"degenerate bbox {self.bbox}")

    @property
    def nx(self) -> int:
        return self.u.shape[2]

    @property
    def ny(self) -> int:
        return self.u.shape[1]

    def lons(self) -> np.ndarray:
        return np.linspace(self.bbox[0], self.bbox[1], self.nx)

    def lats(self) -> np.ndarray:
        return np.linspace(self.bbox[2], self.bbox[3], self.ny)

    def covers(self, bbox) -> bool:
        lon_min, lon_max, lat_min, lat_max = bbox
        return (self.bbox[0] <= lon_min and lon_max <= self.bbox[1]
                and self.bbox[2] <= lat_min and lat_max <= self.bbox[3])


def format_field(f: WindField) -> str:
    """Serialize a field; floats as repr so parsing recovers them exactly."""
    lines = [
        FIELD_TAG,
        f"source {f.source}",
        f"issued_at {iso_format(f.issued_at)}",
        f"stale {int(f.stale)}",
        "bbox " + " ".join(repr(float(x)) for x in f.bbox),
        f"grid {f.nx} {f.ny}",
        "times " + " ".join(iso_format(t) for t in f.times),
    ]
    for i, t in enumerate(f.times):
        lines.append(f"block {iso_format(t)}")
        for name, plane in (("u", f.u[i]), ("v", f.v[i])):
            lines.append(name + " " + " ".join(repr(float(x)) for x in plane.ravel()))
    return "\n".join(lines) + "\n"


def parse_field(text: str, source: str | None = None) -> WindField:
    """Inverse of format_field. ParseError for syntax, ShapeError for layout."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != FIELD_TAG:
        raise ParseError(f"not a {FIELD_TAG} document")
    head: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("block "):
        key, _, rest = lines[i].partition(" ")
        head[key] = rest.strip()
        i += 1
    try:
        src = head["source"]
        issued = iso_parse(head["issued_at"])
        stale = bool(int(head.get("stale", "0")))
        bbox = tuple(float(x) for x in head["bbox"].split())
        nx, ny = (int(x) for x in head["grid"].split())
        times = [iso_parse(x) for x in head["times"].split()]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad field header: {exc}") from exc
    if len(bbox) != 4:
        raise ParseError(f"bbox needs 4 numbers, got {len(bbox)}")

    u = np.empty((len(times), ny, nx))
    v = np.empty_like(u)
    for k, t in enumerate(times):
        if i + 2 >= len(lines) + 1 or not lines[i].startswith("block "):
            raise ShapeError(f"missing block for time {iso_format(t)}")
        if iso_parse(lines[i].split(None, 1)[1]) != t:
            raise ShapeError(f"block order differs from times list at {k}")
        i += 1
        for name, dest in (("u", u), ("v", v)):
            if i >= len(lines) or not lines[i].startswith(name + " "):
                raise ShapeError(f"missing {name} plane for time {iso_format(t)}")
            try:
                vals = np.array([float(x) for x in lines[i].split()[1:]])
            except ValueError as exc:
                raise ParseError(f"bad {name} plane at {iso_format(t)}: {exc}") from exc
            if vals.size != nx * ny:
                raise ShapeError(
                    f"{name} plane at {iso_format(t)} has {vals.size} values, "
                    f"grid needs {nx * ny}")
            dest[k] = vals.reshape(ny, nx)
            i += 1
    if i != len(lines):
        raise ShapeError(f"{len(lines) - i} trailing lines after the last plane")
    return WindField(bbox, np.array(times), u, v, issued,
                     source if source is not None else src, stale)


def read_field(path: str | Path) -> WindField:
    return parse_field(Path(path).read_text())


def write_field(path: str | Path, f: WindField) -> None:
    Path(path).write_text(format_field(f))


def sample(f: WindField, lon: float, lat: float, at: float) -> tuple[float, float]:
    """(u, v) at a point and instant: bilinear in space, linear in time."""
    lon_min, lon_max, lat_min, lat_max = f.bbox
    if not (lon_min <= lon <= lon_max and lat_min <= lat <= lat_max):
        raise OutOfDomain(f"({lon}, {lat}) outside bbox {f.bbox}")
    if not (f.times[0] <= at <= f.times[-1]):
        raise OutOfDomain(f"{iso_format(at)} outside forecast span "
                          f"[{iso_format(f.times[0])}, {iso_format(f.times[-1])}]")

    x = (lon - lon_min) / (lon_max - lon_min) * (f.nx - 1)
    y = (lat - lat_min) / (lat_max - lat_min) * (f.ny - 1)
    ix = min(int(x), f.nx - 2)
    iy = min(int(y), f.ny - 2)
    fx = x - ix
    fy = y - iy

    it = int(np.searchsorted(f.times, at, side="right")) - 1
    if it >= f.times.size - 1:          # exactly the last instant
        it = max(f.times.size - 2, 0)
    ft = 0.0
    if f.times.size > 1:
        ft = (at - f.times[it]) / (f.times[it + 1] - f.times[it])

    def plane(arr, k):
        c = arr[k, iy:iy + 2, ix:ix + 2]
        bottom = c[0, 0] * (1 - fx) + c[0, 1] * fx
        top = c[1, 0] * (1 - fx) + c[1, 1] * fx
        return bottom * (1 - fy) + top * fy

    def component(arr):
        first = plane(arr, it)
        if ft == 0.0:
            return first
        return first * (1 - ft) + plane(arr, it + 1) * ft

    return float(component(f.u)), float(component(f.v))


def speed_direction(u: float, v: float) -> tuple[float, float, bool]:
    """(speed m/s, direction the wind comes FROM in degrees clockwise from
    north, calm flag). Calm means speed 0; direction is reported as 0."""
    speed = math.hypot(u, v)
    if speed == 0.0:
        return 0.0, 0.0, True
    return speed, math.degrees(math.atan2(-u, -v)) % 360.0, False


@dataclass
class ForecastEndpoint:
    """Where and how often to pull fields. url may be a local fixture path."""

    url: str
    query: dict = field(default_factory=dict)
    refresh_interval: float = 600.0
    timeout: float = 5.0
    retries: int = 2

    def validate(self) -> None:
        if self.refresh_interval <= 0:
            raise InvalidRange(
                f"refresh interval must be positive, got {self.refresh_interval}")


def _http_fetch(endpoint: ForecastEndpoint, bbox, hours) -> str:
    if "://" not in endpoint.url:
        try:
            return Path(endpoint.url).read_text()
        except OSError as exc:
            raise NetworkError(f"fixture {endpoint.url}: {exc}") from exc
    query = dict(endpoint.query)
    if bbox is not None:
        query["bbox"] = ",".join(repr(float(x)) for x in bbox)
    if hours is not None:
        query["hours"] = repr(float(hours))
    url = endpoint.url
    if query:
        url += ("&" if "?" in url else "?") + urllib.parse.urlencode(query)
    try:
        with urllib.request.urlopen(url, timeout=endpoint.timeout) as resp:
            return resp.read().decode("utf-8")
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise NetworkError(f"GET {url}: {exc}") from exc


class WeatherClient:
    """Caching fetch front end; one immutable field snapshot per bbox.

    Readers sample whatever snapshot they were handed; the cache swap is
    a single dict assignment under a lock, so concurrent samplers never
    see a half-updated field.
    """

    def __init__(self, endpoint: ForecastEndpoint, fetcher=None,
                 clock=time.monotonic):
        endpoint.validate()
        self.endpoint = endpoint
        self._fetch_text = fetcher or _http_fetch
        self._clock = clock
        self._cache: dict[tuple, tuple[float, WindField]] = {}
        self._lock = threading.Lock()

    def fetch(self, bbox=None, hours=None) -> WindField:
        """Current field, from cache when fresh enough.

        Network failure after the retry budget serves the cached field
        flagged stale; with a cold cache it propagates as NetworkError.
        A malformed payload is never cached and never masked.
        """
        key = (self.endpoint.url, tuple(bbox) if bbox else None)
        with self._lock:
            hit = self._cache.get(key)
            if hit and self._clock() - hit[0] < self.endpoint.refresh_interval:
                return hit[1]
        try:
            text = self._retrying_fetch(bbox, hours)
        except NetworkError:
            if hit:
                return replace(hit[1], stale=True)
            raise
        fresh = parse_field(text, source=self.endpoint.url)
        with self._lock:
            self._cache[key] = (self._clock(), fresh)
        return fresh

    def _retrying_fetch(self, bbox, hours) -> str:
        last: NetworkError | None = None
        for _ in range(self.endpoint.retries + 1):
            try:
                return self._fetch_text(self.endpoint, bbox, hours)
            except NetworkError as exc:
                last = exc
        raise last
