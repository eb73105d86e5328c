"""Training loops: standard fit, persistence-emulation pretraining, finetune.

Everything is deterministic given (seed, config, data): batch order
comes from one seeded generator, gradient accumulation order is fixed,
and the returned model is the snapshot with the best validation loss.
The validation split is chronological (the last fraction of prediction
instants), never shuffled, so overlapping windows cannot leak targets
across the split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyDataset, NonFiniteLoss, TaskMismatch
from .metrics import Dataset, ForecastTask
from .nets import ForecastModel, make_model


@dataclass
class TrainConfig:
    batch_size: int = 32
    validation_fraction: float = 0.10
    max_epochs: int = 50
    patience: int = 1       # epochs without validation improvement before stopping
    learning_rate: float = 1e-3
    seed: int = 0

    def validate(self) -> None:
        if self.batch_size < 1:
            raise EmptyDataset(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise EmptyDataset(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}")


class Adam:
    """Adaptive moment estimation on a flat parameter vector."""

    def __init__(self, n: int, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def update(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        mhat = self.m / (1.0 - self.beta1 ** self.t)
        vhat = self.v / (1.0 - self.beta2 ** self.t)
        return params - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _eval_loss(model: ForecastModel, data: Dataset, js: np.ndarray,
               chunk: int = 4096) -> float:
    """Mean squared error over the given prediction instants."""
    total = 0.0
    count = 0
    for lo in range(0, js.size, chunk):
        batch = js[lo:lo + chunk]
        pred = model.forward_batch(data.inputs_at(batch))
        truth = data.targets_at(batch)
        total += float(np.sum((truth - pred) ** 2))
        count += truth.size
    return total / count


def train(model: ForecastModel, data: Dataset, config: TrainConfig) -> ForecastModel:
    """Mini-batch descent with patience stopping on a chronological split.

    Returns a new model holding the best-validation weights; the input
    model is left untouched. The full epoch history (including the
    epoch-0 baseline of the starting weights) rides on model.history.
    """
    config.validate()
    if model.task.m != data.task.m or model.task.k != data.task.k \
            or model.task.l != data.task.l:
        raise TaskMismatch(f"model task {model.task} vs data task {data.task}")
    if not hasattr(model, "backward_batch"):
        raise TaskMismatch(f"{model.kind} model has no trainable weights")
    js = data.instants()
    if js.size < config.batch_size:
        raise EmptyDataset(
            f"need at least batch_size={config.batch_size} samples, have {js.size}")
    n_val = max(1, int(round(config.validation_fraction * js.size)))
    if n_val >= js.size:
        raise EmptyDataset("validation split leaves no training samples")
    train_js, val_js = js[:-n_val], js[-n_val:]

    work = model.clone()
    rng = np.random.default_rng(config.seed)
    opt = Adam(work.n_params, config.learning_rate)
    best_val = _eval_loss(work, data, val_js)
    best_params = work.params_flat()
    history = [{"epoch": 0, "train_loss": None, "val_loss": best_val}]
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(train_js)
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, order.size, config.batch_size):
            bjs = order[lo:lo + config.batch_size]
            loss, grad = work.backward_batch(data.inputs_at(bjs), data.targets_at(bjs))
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"loss diverged at epoch {epoch}")
            work.set_params_flat(opt.update(work.params_flat(), grad))
            epoch_loss += loss
            n_batches += 1
        val_loss = _eval_loss(work, data, val_js)
        history.append({"epoch": epoch, "train_loss": epoch_loss / n_batches,
                        "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_params = work.params_flat()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    work.set_params_flat(best_params)
    work.history = history
    work.norm = data.stats
    work.provenance = dict(model.provenance)
    work.provenance["trained"] = {
        "samples": int(train_js.size),
        "epochs": len(history) - 1,
        "best_val_loss": best_val,
        "timescale": data.task.timescale,
    }
    return work


def _synthetic_batch(rng, size: int, task: ForecastTask):
    """Uniform-[0,1] windows with persistence targets."""
    x = rng.uniform(0.0, 1.0, (size, task.m, task.l))
    y = np.repeat(x[:, -1:, :], task.k, axis=1)
    return x, y


def pretrain_persistence(kind: str, task: ForecastTask, n_synthetic: int,
                         threshold: float = 0.01, hidden=None,
                         batch_size: int = 64, learning_rate: float = 2e-3,
                         seed: int = 0, eval_windows: int = 1000,
                         eval_stride: int = 16) -> ForecastModel:
    """Teach a fresh network to emulate the persistence map.

    Streams synthetic uniform windows until the NRMSE against the
    persistence output on a fixed held-out synthetic batch drops below
    threshold or the sample budget runs out. Budget exhaustion is not an
    exception: the model comes back with provenance["pretrain"]["reached"]
    False so callers can decide.
    """
    if n_synthetic < 1:
        raise EmptyDataset(f"n_synthetic must be >= 1, got {n_synthetic}")
    rng = np.random.default_rng(seed)
    model = make_model(kind, task, seed=seed, hidden=hidden)
    x_eval, y_eval = _synthetic_batch(rng, eval_windows, task)

    def held_out_nrmse() -> float:
        pred = model.forward_batch(x_eval)
        return float(np.sqrt(np.mean((pred - y_eval) ** 2)))

    opt = Adam(model.n_params, learning_rate)
    used = 0
    score = held_out_nrmse()
    checkpoints = [{"samples": 0, "nrmse": score}]
    batches = 0
    while score >= threshold and used < n_synthetic:
        size = min(batch_size, n_synthetic - used)
        x, y = _synthetic_batch(rng, size, task)
        loss, grad = model.backward_batch(x, y)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"pretraining diverged after {used} samples")
        model.set_params_flat(opt.update(model.params_flat(), grad))
        used += size
        batches += 1
        if batches % eval_stride == 0 or used >= n_synthetic:
            score = held_out_nrmse()
            checkpoints.append({"samples": used, "nrmse": score})
    if checkpoints[-1]["samples"] != used:
        score = held_out_nrmse()
        checkpoints.append({"samples": used, "nrmse": score})
    model.provenance = {
        "init": "persistence-pretrained",
        "pretrain": {"samples_used": used, "budget": int(n_synthetic),
                     "threshold": threshold, "nrmse": score,
                     "reached": bool(score < threshold)},
    }
    model.history = checkpoints
    return model


def finetune(pretrained: ForecastModel, data: Dataset,
             config: TrainConfig) -> ForecastModel:
    """train(), but starting from persistence-pretrained weights."""
    if pretrained.provenance.get("init") != "persistence-pretrained":
        raise TaskMismatch("finetune requires a persistence-pretrained model")
    return train(pretrained, data, config)
