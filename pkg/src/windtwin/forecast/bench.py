"""Horizon stacking and the relative-to-persistence benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyDataset, InvalidRange, TaskMismatch
from .metrics import Dataset, nrmse_dataset
from .nets import ForecastModel, PersistenceModel


def stack_forecasts(model: ForecastModel, window, horizons: int) -> np.ndarray:
    """Chain k-step predictions: feed each block back as newest input.

    Output stacks all blocks, [horizons*k x l]. With horizons = 1 this
    is a single forward pass.
    """
    if horizons < 1:
        raise InvalidRange(f"horizons must be >= 1, got {horizons}")
    window = np.asarray(window, dtype=float)
    blocks = []
    for _ in range(horizons):
        pred = model.forward(window)
        blocks.append(pred)
        window = np.vstack([window, pred])[-model.task.m:]
    return np.vstack(blocks)


@dataclass
class Benchmark:
    """Rows of (model, timescale, nrmse, relative), persistence first."""

    rows: list

    def merge(self, other: "Benchmark") -> "Benchmark":
        return Benchmark(self.rows + other.rows)

    def machine_rows(self) -> str:
        out = ["model,timescale,nrmse,relative"]
        for label, scale, nrmse, rel in self.rows:
            out.append(f"{label},{scale},{nrmse!r},{rel!r}")
        return "\n".join(out) + "\n"

    def text(self) -> str:
        header = ("model", "timescale", "nrmse", "relative")
        cells = [header] + [
            (label, scale, f"{nrmse:.6f}", f"{rel:.4f}")
            for label, scale, nrmse, rel in self.rows
        ]
        widths = [max(len(r[i]) for r in cells) for i in range(4)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
                 for row in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def benchmark(models, test: Dataset) -> Benchmark:
    """Score models against persistence on one test dataset.

    The persistence row is always present and exactly 1.0 by definition;
    other rows report nrmse_dataset(model)/nrmse_dataset(persistence).
    """
    models = list(models)
    task = test.task
    for m in models:
        if (m.task.m, m.task.k, m.task.l, m.task.timescale) != \
                (task.m, task.k, task.l, task.timescale):
            raise TaskMismatch(f"model task {m.task} differs from test task {task}")
    if test.n_samples == 0:
        raise EmptyDataset("test dataset has no prediction instants")
    base = nrmse_dataset(PersistenceModel(task), test)
    rows = [("persistence", task.timescale, base, 1.0)]
    for m in models:
        if m.kind == "persistence":
            continue  # already in the table, by definition at 1.0
        score = nrmse_dataset(m, test)
        rows.append((m.label, task.timescale, score, score / base))
    return Benchmark(rows)
