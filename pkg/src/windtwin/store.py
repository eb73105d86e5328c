"""Append-oriented telemetry store with causal 1-second resampling.

Raw telemetry arrives unsorted, with duplicates and the occasional
unphysical value; the store validates against the catalog at ingest,
keeps one value per (timestamp, parameter) cell, and serves time-ordered
queries plus forward-padded grid frames. Forward padding is strictly
causal: a grid cell never depends on any record later than its instant.

Storage is an in-memory map per parameter (timestamp -> value) with
lazily rebuilt sorted arrays for the read path, plus a newline-delimited
on-disk format for persistence (one `timestamp, parameter, value` record
per line, values round-tripping bit-exactly through repr).
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import Catalog, load_catalog
from .errors import EmptyRange, InsufficientHistory, InvalidRange, ParseError
from .timeutil import grid_ceil, grid_floor, iso_format, iso_parse


@dataclass(frozen=True)
class TelemetryRecord:
    timestamp: float  # epoch seconds, UTC
    parameter: str
    value: float
    source: str = "file"


@dataclass
class IngestReport:
    accepted: int = 0
    rejected_unphysical: int = 0
    rejected_unknown: int = 0
    deduplicated: int = 0

    def merge(self, other: "IngestReport") -> "IngestReport":
        return IngestReport(
            self.accepted + other.accepted,
            self.rejected_unphysical + other.rejected_unphysical,
            self.rejected_unknown + other.rejected_unknown,
            self.deduplicated + other.deduplicated,
        )


@dataclass
class NormalizationStats:
    """Per-parameter min/max and range over a declared reference span.

    `delta` is max - min, the normalizer of the squared-error metric. A
    constant parameter would make it zero, so those get delta 1 and a
    warning flag instead of poisoning every later division.
    """

    parameters: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray
    deltas: np.ndarray
    constant: np.ndarray  # bool per parameter: delta was 0, replaced by 1

    @classmethod
    def from_matrix(cls, parameters, matrix: np.ndarray) -> "NormalizationStats":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
            mins = np.nanmin(matrix, axis=0) if matrix.size else np.empty(matrix.shape[1])
            maxs = np.nanmax(matrix, axis=0) if matrix.size else np.empty(matrix.shape[1])
        deltas = maxs - mins
        const = ~(deltas > 0.0)  # catches both zero-range and all-NaN columns
        deltas = np.where(const, 1.0, deltas)
        return cls(tuple(parameters), mins, maxs, deltas, const)

    def normalize(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.mins) / self.deltas

    def denormalize(self, matrix: np.ndarray) -> np.ndarray:
        return matrix * self.deltas + self.mins

    def to_dict(self) -> dict:
        return {
            "parameters": list(self.parameters),
            "min": [float(v) for v in self.mins],
            "max": [float(v) for v in self.maxs],
            "delta": [float(v) for v in self.deltas],
            "constant": [bool(v) for v in self.constant],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(
            tuple(d["parameters"]),
            np.asarray(d["min"], dtype=float),
            np.asarray(d["max"], dtype=float),
            np.asarray(d["delta"], dtype=float),
            np.asarray(d["constant"], dtype=bool),
        )


@dataclass
class FrameSeries:
    """Uniform-grid multivariate series with padding and missing masks.

    values[t, p] is the most recent ingested value of parameter p at or
    before grid instant t (forward padding). padded[t, p] is True exactly
    when no raw record exists in (t - step, t]. missing[t, p] marks cells
    before the parameter's first record; their values are NaN.
    """

    start: float
    step: float
    parameters: tuple[str, ...]
    values: np.ndarray   # [time, parameter] float64
    padded: np.ndarray   # [time, parameter] bool
    missing: np.ndarray  # [time, parameter] bool
    stats: NormalizationStats | None = None

    @property
    def times(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.shape[0])

    def __len__(self) -> int:
        return self.values.shape[0]

    def slice_rows(self, i0: int, i1: int) -> "FrameSeries":
        """Row range [i0, i1) as a new series; stats recomputed on the slice."""
        vals = self.values[i0:i1]
        return FrameSeries(
            self.start + self.step * i0, self.step, self.parameters,
            vals, self.padded[i0:i1], self.missing[i0:i1],
            NormalizationStats.from_matrix(list(self.parameters), vals),
        )


@dataclass
class _Series:
    """One parameter's records plus its lazily sorted read-side arrays."""

    cells: dict[float, float] = field(default_factory=dict)
    ts: np.ndarray = field(default_factory=lambda: np.empty(0))
    values: np.ndarray = field(default_factory=lambda: np.empty(0))
    sources: dict[float, str] = field(default_factory=dict)
    dirty: bool = False

    def refresh(self) -> None:
        if self.dirty:
            order = np.array(sorted(self.cells.keys()), dtype=float)
            self.ts = order
            self.values = np.array([self.cells[t] for t in order], dtype=float)
            self.dirty = False


class TimeseriesStore:
    """Single-writer, many-reader telemetry store over one catalog.

    All public methods take and release one lock, so readers always see
    the state as of the last completed ingest batch.
    """

    def __init__(self, catalog: Catalog | None = None):
        self.catalog = catalog or load_catalog()
        self._series: dict[str, _Series] = {}
        self._lock = threading.RLock()

    # -- ingestion ---------------------------------------------------------

    def ingest_batch(self, records) -> IngestReport:
        """Ingest records in any order; returns acceptance counters.

        Unknown parameters and unphysical values are skipped and counted.
        Collisions on (timestamp, parameter) keep the last-arriving value
        and count one deduplication, whether or not the value changed.
        """
        report = IngestReport()
        with self._lock:
            for rec in records:
                if rec.parameter not in self.catalog:
                    report.rejected_unknown += 1
                    continue
                if not self.catalog.is_physical(rec.parameter, rec.value):
                    report.rejected_unphysical += 1
                    continue
                series = self._series.setdefault(rec.parameter, _Series())
                ts = float(rec.timestamp)
                if ts in series.cells:
                    report.deduplicated += 1
                else:
                    report.accepted += 1
                series.cells[ts] = float(rec.value)
                series.sources[ts] = rec.source
                series.dirty = True
        return report

    def remove(self, parameter: str, timestamp: float) -> bool:
        """Delete one cell; used by causality tests to mutate the tail."""
        with self._lock:
            series = self._series.get(parameter)
            if series and timestamp in series.cells:
                del series.cells[timestamp]
                series.sources.pop(timestamp, None)
                series.dirty = True
                return True
        return False

    # -- queries -----------------------------------------------------------

    def query(self, t_from: float, t_to: float, parameters=None) -> list[TelemetryRecord]:
        """Stored records with t_from <= timestamp <= t_to, time-ordered.

        Ties at the same instant are ordered by parameter id so output is
        deterministic for every ingest permutation.
        """
        if t_from > t_to:
            raise InvalidRange(f"from {t_from} > to {t_to}")
        with self._lock:
            params = self._check_params(parameters)
            out: list[TelemetryRecord] = []
            for pid in params:
                series = self._series.get(pid)
                if series is None:
                    continue
                series.refresh()
                lo = np.searchsorted(series.ts, t_from, side="left")
                hi = np.searchsorted(series.ts, t_to, side="right")
                for i in range(lo, hi):
                    ts = float(series.ts[i])
                    out.append(
                        TelemetryRecord(ts, pid, float(series.values[i]),
                                        series.sources.get(ts, "file"))
                    )
        out.sort(key=lambda r: (r.timestamp, r.parameter))
        return out

    def resample(self, t_from: float, t_to: float, parameters=None,
                 step: float = 1.0) -> FrameSeries:
        """Forward-padded frames on the step grid covering [t_from, t_to].

        Grid instants are the multiples of `step` (from the epoch) inside
        the range. Causality: no cell depends on records after its instant.
        """
        if t_from > t_to:
            raise InvalidRange(f"from {t_from} > to {t_to}")
        if step <= 0:
            raise InvalidRange(f"step must be positive, got {step}")
        with self._lock:
            params = self._check_params(parameters)
            start = grid_ceil(t_from, step)
            end = grid_floor(t_to, step)
            n = max(0, int(round((end - start) / step)) + 1) if end >= start else 0
            grid = start + step * np.arange(n)
            values = np.full((n, len(params)), np.nan)
            padded = np.ones((n, len(params)), dtype=bool)
            missing = np.ones((n, len(params)), dtype=bool)
            for j, pid in enumerate(params):
                series = self._series.get(pid)
                if series is None or not series.cells:
                    continue
                series.refresh()
                idx = np.searchsorted(series.ts, grid, side="right") - 1
                have = idx >= 0
                values[have, j] = series.values[idx[have]]
                missing[:, j] = ~have
                prev = np.searchsorted(series.ts, grid - step, side="right")
                padded[:, j] = (np.searchsorted(series.ts, grid, side="right") - prev) == 0
        stats = NormalizationStats.from_matrix(params, values) if n > 0 else None
        return FrameSeries(start, step, tuple(params), values, padded, missing, stats)

    def window(self, at: float, m: int, parameters=None, step: float = 1.0) -> np.ndarray:
        """The m most recent resampled rows ending at `at`, oldest first."""
        if m < 1:
            raise InvalidRange(f"window length must be >= 1, got {m}")
        at = grid_floor(at, step)
        fs = self.resample(at - (m - 1) * step, at, parameters, step)
        if len(fs) != m or fs.missing.any():
            raise InsufficientHistory(
                f"need {m} complete rows of {fs.parameters} ending at {iso_format(at)}"
            )
        return fs.values

    def normalization_stats(self, t_from: float, t_to: float, parameters=None) -> NormalizationStats:
        """Exact per-parameter min/max over raw records in [t_from, t_to]."""
        if t_from > t_to:
            raise InvalidRange(f"from {t_from} > to {t_to}")
        with self._lock:
            params = self._check_params(parameters)
            mins, maxs = [], []
            for pid in params:
                series = self._series.get(pid)
                if series is None or not series.cells:
                    raise EmptyRange(f"no records for {pid} in range")
                series.refresh()
                lo = np.searchsorted(series.ts, t_from, side="left")
                hi = np.searchsorted(series.ts, t_to, side="right")
                if hi <= lo:
                    raise EmptyRange(f"no records for {pid} in range")
                chunk = series.values[lo:hi]
                mins.append(chunk.min())
                maxs.append(chunk.max())
        mins = np.array(mins)
        maxs = np.array(maxs)
        deltas = maxs - mins
        const = deltas == 0.0
        return NormalizationStats(tuple(params), mins, maxs,
                                  np.where(const, 1.0, deltas), const)

    # -- bookkeeping ---------------------------------------------------------

    def parameters_present(self) -> list[str]:
        with self._lock:
            return [p for p, s in self._series.items() if s.cells]

    def record_count(self) -> int:
        with self._lock:
            return sum(len(s.cells) for s in self._series.values())

    def time_extent(self) -> tuple[float, float] | None:
        """(first, last) record timestamp over all parameters, or None."""
        with self._lock:
            firsts, lasts = [], []
            for s in self._series.values():
                if s.cells:
                    s.refresh()
                    firsts.append(s.ts[0])
                    lasts.append(s.ts[-1])
            if not firsts:
                return None
            return float(min(firsts)), float(max(lasts))

    def _check_params(self, parameters) -> list[str]:
        if parameters is None:
            params = sorted(self._series.keys())
        else:
            params = list(parameters)
            for pid in params:
                self.catalog.lookup(pid)
        return params

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> int:
        """Write all records as `timestamp_iso8601, parameter_id, value` lines."""
        with self._lock:
            lines = []
            for rec in self.query(*(self.time_extent() or (0.0, 0.0))):
                lines.append(f"{iso_format(rec.timestamp)},{rec.parameter},{rec.value!r}")
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
        return len(lines)

    def load(self, path: str | Path, source: str = "file") -> IngestReport:
        """Ingest a record file; rows may be in any order."""
        return self.ingest_batch(read_records(path, source))


def parse_records(text: str, source: str = "file",
                  origin: str = "<records>") -> list[TelemetryRecord]:
    """Parse newline-delimited records (unsorted rows accepted)."""
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{origin}:{lineno}: expected 'timestamp,parameter,value'")
        ts, pid, val = (p.strip() for p in parts)
        try:
            records.append(TelemetryRecord(iso_parse(ts), pid, float(val), source))
        except ValueError as exc:
            raise ParseError(f"{origin}:{lineno}: {exc}") from exc
    return records


def read_records(path: str | Path, source: str = "file") -> list[TelemetryRecord]:
    """Parse a newline-delimited record file."""
    return parse_records(Path(path).read_text(), source, str(path))


def write_records(path: str | Path, records) -> int:
    """Write records in the store's newline-delimited format."""
    lines = [f"{iso_format(r.timestamp)},{r.parameter},{r.value!r}" for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
    return len(lines)
