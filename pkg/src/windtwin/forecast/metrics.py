"""Forecast tasks, windowed datasets, and the NMSE metric family.

The error of a single k-step prediction over l parameters is the root
mean of per-cell normalized squared errors; the dataset error is the
root mean of squared per-instant errors over every prediction instant.
Both reduce to plain (R)MSE on data normalized to [0, 1], because the
per-parameter span folds into the normalization; raw-space and
normalized-space evaluations agree exactly, which the tests exercise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..catalog import load_catalog
from ..errors import (
    DegenerateDelta,
    EmptyDataset,
    ShapeMismatch,
    TaskMismatch,
)
from ..store import FrameSeries, NormalizationStats

TIMESCALE_STEP = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0}


@dataclass(frozen=True)
class ForecastTask:
    """What to predict: l parameters, m input steps, k output steps, one grid."""

    timescale: str = "seconds"
    m: int = 30
    k: int = 10
    parameters: tuple = ()

    def __post_init__(self):
        if self.timescale not in TIMESCALE_STEP:
            raise TaskMismatch(f"unknown timescale {self.timescale!r}")
        if self.m < 1 or self.k < 1:
            raise TaskMismatch(f"need m >= 1 and k >= 1, got m={self.m} k={self.k}")
        if not self.parameters:
            object.__setattr__(self, "parameters", tuple(load_catalog().forecast_set()))
        else:
            object.__setattr__(self, "parameters", tuple(self.parameters))

    @property
    def step(self) -> float:
        return TIMESCALE_STEP[self.timescale]

    @property
    def l(self) -> int:
        return len(self.parameters)

    def to_dict(self) -> dict:
        return {"timescale": self.timescale, "m": self.m, "k": self.k,
                "parameters": list(self.parameters)}

    @classmethod
    def from_dict(cls, d: dict) -> "ForecastTask":
        return cls(d["timescale"], int(d["m"]), int(d["k"]), tuple(d["parameters"]))


def prediction_instants(n: int, m: int, k: int) -> np.ndarray:
    """0-based instants j = m .. n-k-1; the window of rows j-m+1 .. j is
    the input and rows j+1 .. j+k the target. Count is n - m - k."""
    if n < m + k + 1:
        return np.empty(0, dtype=np.int64)
    return np.arange(m, n - k, dtype=np.int64)


@dataclass
class Dataset:
    """A normalized [n x l] matrix plus the window bookkeeping over it.

    matrix is expected in training-range normalized form (the stats say
    how to get back to raw units). valid marks rows usable as window
    members; a prediction instant is dropped when any row of its input
    or target window is invalid (no imputation).
    """

    matrix: np.ndarray
    task: ForecastTask
    stats: NormalizationStats | None = None
    valid: np.ndarray | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise ShapeMismatch(f"matrix must be 2-D, got {self.matrix.ndim}-D")
        if self.matrix.shape[1] != self.task.l:
            raise ShapeMismatch(
                f"matrix has {self.matrix.shape[1]} columns, task has l={self.task.l}")
        if self.valid is not None:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != (self.matrix.shape[0],):
                raise ShapeMismatch("valid mask length must equal row count")

    @classmethod
    def from_frames(cls, fs: FrameSeries, task: ForecastTask,
                    stats: NormalizationStats | None = None) -> "Dataset":
        """Build from a resampled frame series.

        stats defaults to the frame's own (training case); pass the
        training stats explicitly when building validation or test data.
        """
        if fs.step != task.step:
            raise TaskMismatch(
                f"frame step {fs.step} s does not match task step {task.step} s")
        cols = []
        for p in task.parameters:
            try:
                cols.append(fs.parameters.index(p))
            except ValueError:
                raise TaskMismatch(f"frame series lacks parameter {p}") from None
        raw = fs.values[:, cols]
        use = stats if stats is not None else _subset_stats(fs, cols)
        matrix = use.normalize(raw)
        valid = ~np.asarray(fs.missing)[:, cols].any(axis=1)
        return cls(matrix, task, use, valid)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def instants(self) -> np.ndarray:
        js = prediction_instants(self.n, self.task.m, self.task.k)
        if self.valid is None or js.size == 0 or self.valid.all():
            return js
        # an instant survives when its full m+k window has no invalid row
        bad = np.concatenate([[0], np.cumsum(~self.valid)])
        lo = js - self.task.m + 1
        hi = js + self.task.k + 1
        return js[bad[hi] - bad[lo] == 0]

    @property
    def n_samples(self) -> int:
        return int(self.instants().size)

    def inputs_at(self, js: np.ndarray) -> np.ndarray:
        offs = np.arange(-self.task.m + 1, 1)
        return self.matrix[np.asarray(js)[:, None] + offs]

    def targets_at(self, js: np.ndarray) -> np.ndarray:
        offs = np.arange(1, self.task.k + 1)
        return self.matrix[np.asarray(js)[:, None] + offs]


def chronological_pair(fs: FrameSeries, task: ForecastTask,
                       test_fraction: float = 0.10) -> tuple:
    """Split a frame series into (train, test) datasets at a row boundary.

    The last test_fraction of rows becomes the test span. Both datasets
    are normalized with the training span's stats, so test values may
    leave [0, 1]; windows never straddle the boundary.
    """
    n = len(fs)
    cut = int(round(n * (1.0 - test_fraction)))
    need = task.m + task.k + 1
    if cut < need or n - cut < need:
        raise EmptyDataset(
            f"split at {cut}/{n} leaves too few rows for m+k+1 = {need}")
    train = Dataset.from_frames(fs.slice_rows(0, cut), task)
    test = Dataset.from_frames(fs.slice_rows(cut, n), task, stats=train.stats)
    return train, test


def _subset_stats(fs: FrameSeries, cols: list) -> NormalizationStats:
    if fs.stats is None:
        raise EmptyDataset("frame series carries no normalization stats")
    s = fs.stats
    names = tuple(s.parameters[c] for c in cols)
    return NormalizationStats(names, s.mins[cols], s.maxs[cols],
                              s.deltas[cols], s.constant[cols])


def nmse(x_true, x_pred, delta):
    """Squared error normalized by the parameter span."""
    if np.any(np.asarray(delta) <= 0):
        raise DegenerateDelta(f"delta must be positive, got {delta}")
    return ((np.asarray(x_true) - np.asarray(x_pred)) / delta) ** 2


def nrmse_single(truth, pred, deltas) -> float:
    """Error of one prediction: root mean NMSE over k steps and l parameters."""
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if truth.shape != pred.shape:
        raise ShapeMismatch(f"truth {truth.shape} vs pred {pred.shape}")
    if truth.ndim != 2:
        raise ShapeMismatch(f"expected [k x l] arrays, got {truth.ndim}-D")
    if deltas.shape != (truth.shape[1],):
        raise ShapeMismatch(
            f"expected {truth.shape[1]}-long deltas, got {deltas.shape}")
    return float(np.sqrt(np.mean(nmse(truth, pred, deltas))))


def nrmse_dataset(model, data: Dataset, chunk: int = 4096) -> float:
    """Dataset error: root mean of squared per-instant errors.

    Operates in the dataset's normalized space, where every per-column
    span is 1 by construction; the averaged squared per-instant error
    divides by the prediction-instant count n - m - k (fewer when rows
    are invalid).
    """
    if model.task.m != data.task.m or model.task.k != data.task.k \
            or model.task.l != data.task.l:
        raise TaskMismatch(
            f"model task {model.task} incompatible with data task {data.task}")
    js = data.instants()
    if js.size == 0:
        raise EmptyDataset(
            f"no prediction instants: n={data.n}, m={data.task.m}, k={data.task.k}")
    total = 0.0
    for lo in range(0, js.size, chunk):
        batch = js[lo:lo + chunk]
        pred = model.forward_batch(data.inputs_at(batch))
        truth = data.targets_at(batch)
        sq = (truth - pred) ** 2
        total += float(np.sum(np.mean(sq, axis=(1, 2))))
    return float(np.sqrt(total / js.size))
