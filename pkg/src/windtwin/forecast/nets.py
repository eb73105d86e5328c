"""Multi-step forecasters: persistence, feed-forward, and LSTM.

All three consume an [m x l] window and emit a [k x l] block, every
parameter predicted jointly. The networks are plain numpy with
hand-written backpropagation (through time, for the LSTM); training
operates on [0, 1]-normalized data, where the squared-error loss equals
the normalized metric the evaluation uses. Weight layout is a single
flat float64 vector with a fixed segment order, so optimizers and the
model container never care about topology internals.

The model container is JSON: topology descriptor, the flat weight
vector as base64 of little-endian 8-byte floats, task definition,
normalization stats, provenance, and training history. Loading rebuilds
the model and re-verifies that the vector length matches the topology.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError, ShapeMismatch, TaskMismatch, UnknownModel
from ..store import NormalizationStats
from .metrics import Dataset, ForecastTask

FORMAT_TAG = "windtwin-model/1"


def persistence_forecast(window, k: int = 10) -> np.ndarray:
    """[k x l] block whose every row is the last row of the window."""
    window = np.asarray(window, dtype=float)
    if window.size == 0:
        raise ShapeMismatch("empty window")
    if window.ndim != 2:
        raise ShapeMismatch(f"window must be 2-D, got {window.ndim}-D")
    return np.repeat(window[-1:, :], k, axis=0)


@dataclass
class ForecastModel:
    """Shared surface: forward, forward_batch, flat parameter access."""

    kind = "abstract"

    task: ForecastTask
    norm: NormalizationStats | None = None
    provenance: dict = field(default_factory=lambda: {"init": "random"})
    history: list = field(default_factory=list)

    def forward(self, window) -> np.ndarray:
        window = np.asarray(window, dtype=float)
        if window.shape != (self.task.m, self.task.l):
            raise ShapeMismatch(
                f"window {window.shape}, expected {(self.task.m, self.task.l)}")
        return self.forward_batch(window[None])[0]

    def forward_batch(self, windows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params_flat(self) -> np.ndarray:
        return np.empty(0)

    def set_params_flat(self, vec: np.ndarray) -> None:
        if np.asarray(vec).size != 0:
            raise ShapeMismatch("persistence has no trainable weights")

    @property
    def n_params(self) -> int:
        return self.params_flat().size

    def clone(self) -> "ForecastModel":
        raise NotImplementedError

    @property
    def label(self) -> str:
        if self.provenance.get("init") == "persistence-pretrained":
            return f"{self.kind}-pretrained"
        return self.kind


class PersistenceModel(ForecastModel):
    kind = "persistence"

    def forward_batch(self, windows: np.ndarray) -> np.ndarray:
        windows = np.asarray(windows, dtype=float)
        _check_batch(windows, self.task)
        last = windows[:, -1:, :]
        return np.repeat(last, self.task.k, axis=1)

    def clone(self) -> "PersistenceModel":
        return PersistenceModel(self.task, self.norm,
                                dict(self.provenance), list(self.history))


def _check_batch(windows: np.ndarray, task: ForecastTask) -> None:
    if windows.ndim != 3 or windows.shape[1:] != (task.m, task.l):
        raise ShapeMismatch(
            f"batch {windows.shape}, expected [B x {task.m} x {task.l}]")


def _uniform(rng, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


class DNNModel(ForecastModel):
    """Flattened window through ReLU hidden layers to a linear k*l head."""

    kind = "dnn"

    def __init__(self, task, hidden=(512, 256), seed=0, norm=None,
                 provenance=None, history=None):
        super().__init__(task, norm,
                         provenance or {"init": "random"}, history or [])
        self.hidden = tuple(int(h) for h in hidden)
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ShapeMismatch(f"bad hidden widths {hidden}")
        rng = np.random.default_rng(seed)
        widths = [task.m * task.l, *self.hidden, task.k * task.l]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            self.weights.append(_uniform(rng, fan_in, (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def forward_batch(self, windows: np.ndarray) -> np.ndarray:
        windows = np.asarray(windows, dtype=float)
        _check_batch(windows, self.task)
        a = windows.reshape(windows.shape[0], -1)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(0.0, a @ W + b)
        out = a @ self.weights[-1] + self.biases[-1]
        return out.reshape(windows.shape[0], self.task.k, self.task.l)

    def backward_batch(self, windows, targets):
        """Mean squared error over every output cell, plus its gradient."""
        windows = np.asarray(windows, dtype=float)
        targets = np.asarray(targets, dtype=float)
        _check_batch(windows, self.task)
        acts = [windows.reshape(windows.shape[0], -1)]
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            acts.append(np.maximum(0.0, acts[-1] @ W + b))
        out = acts[-1] @ self.weights[-1] + self.biases[-1]
        diff = out - targets.reshape(targets.shape[0], -1)
        loss = float(np.mean(diff ** 2))
        gW = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        d = 2.0 * diff / diff.size
        for i in range(len(self.weights) - 1, -1, -1):
            gW[i] = acts[i].T @ d
            gb[i] = d.sum(axis=0)
            if i > 0:
                d = (d @ self.weights[i].T) * (acts[i] > 0.0)
        return loss, pack(gW, gb)

    def params_flat(self) -> np.ndarray:
        return pack(self.weights, self.biases)

    def set_params_flat(self, vec: np.ndarray) -> None:
        unpack(vec, self.weights, self.biases)

    def clone(self) -> "DNNModel":
        other = DNNModel(self.task, self.hidden, seed=0, norm=self.norm,
                         provenance=dict(self.provenance), history=list(self.history))
        other.set_params_flat(self.params_flat())
        return other


class LSTMModel(ForecastModel):
    """One LSTM layer over the m timesteps, ReLU dense, linear k*l head.

    Gate order in the stacked weight matrices is input, forget,
    candidate, output; the forget-gate bias starts at 1 so early
    training does not wipe the cell state.
    """

    kind = "lstm"

    def __init__(self, task, hidden=128, dense=128, seed=0, norm=None,
                 provenance=None, history=None):
        super().__init__(task, norm,
                         provenance or {"init": "random"}, history or [])
        self.hidden = int(hidden)
        self.dense = int(dense)
        if self.hidden < 1 or self.dense < 1:
            raise ShapeMismatch(f"bad widths hidden={hidden} dense={dense}")
        rng = np.random.default_rng(seed)
        l, h = task.l, self.hidden
        self.Wx = _uniform(rng, l, (l, 4 * h))
        self.Wh = _uniform(rng, h, (h, 4 * h))
        self.b = np.zeros(4 * h)
        self.b[h:2 * h] = 1.0
        self.Wd = _uniform(rng, h, (h, self.dense))
        self.bd = np.zeros(self.dense)
        self.Wo = _uniform(rng, self.dense, (self.dense, task.k * task.l))
        self.bo = np.zeros(task.k * task.l)

    def _arrays(self):
        return [self.Wx, self.Wh, self.b, self.Wd, self.bd, self.Wo, self.bo]

    def _recur(self, windows):
        """Run the recurrence; returns final h and the per-step cache."""
        B = windows.shape[0]
        h_dim = self.hidden
        h = np.zeros((B, h_dim))
        c = np.zeros((B, h_dim))
        cache = []
        for t in range(self.task.m):
            x = windows[:, t, :]
            z = x @ self.Wx + h @ self.Wh + self.b
            i = _sigmoid(z[:, :h_dim])
            f = _sigmoid(z[:, h_dim:2 * h_dim])
            g = np.tanh(z[:, 2 * h_dim:3 * h_dim])
            o = _sigmoid(z[:, 3 * h_dim:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            cache.append((x, h_prev, c_prev, i, f, g, o, tc))
        return h, c, cache

    def forward_batch(self, windows: np.ndarray) -> np.ndarray:
        windows = np.asarray(windows, dtype=float)
        _check_batch(windows, self.task)
        h, _, _ = self._recur(windows)
        d = np.maximum(0.0, h @ self.Wd + self.bd)
        out = d @ self.Wo + self.bo
        return out.reshape(windows.shape[0], self.task.k, self.task.l)

    def backward_batch(self, windows, targets):
        """Mean squared error and its gradient by backprop through time."""
        windows = np.asarray(windows, dtype=float)
        targets = np.asarray(targets, dtype=float)
        _check_batch(windows, self.task)
        h_dim = self.hidden
        h_fin, _, cache = self._recur(windows)
        d_pre = h_fin @ self.Wd + self.bd
        d_act = np.maximum(0.0, d_pre)
        out = d_act @ self.Wo + self.bo
        diff = out - targets.reshape(targets.shape[0], -1)
        loss = float(np.mean(diff ** 2))

        dout = 2.0 * diff / diff.size
        gWo = d_act.T @ dout
        gbo = dout.sum(axis=0)
        dd = (dout @ self.Wo.T) * (d_pre > 0.0)
        gWd = h_fin.T @ dd
        gbd = dd.sum(axis=0)
        dh = dd @ self.Wd.T
        dc = np.zeros_like(dh)
        gWx = np.zeros_like(self.Wx)
        gWh = np.zeros_like(self.Wh)
        gb = np.zeros_like(self.b)
        for t in range(self.task.m - 1, -1, -1):
            x, h_prev, c_prev, i, f, g, o, tc = cache[t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc ** 2)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ], axis=1)
            gWx += x.T @ dz
            gWh += h_prev.T @ dz
            gb += dz.sum(axis=0)
            dh = dz @ self.Wh.T
            dc = dc * f
        grads = [gWx, gWh, gb, gWd, gbd, gWo, gbo]
        return loss, np.concatenate([g.ravel() for g in grads])

    def params_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self._arrays()])

    def set_params_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        arrays = self._arrays()
        total = sum(a.size for a in arrays)
        if vec.size != total:
            raise ShapeMismatch(f"expected {total} weights, got {vec.size}")
        pos = 0
        for a in arrays:
            a[...] = vec[pos:pos + a.size].reshape(a.shape)
            pos += a.size

    def clone(self) -> "LSTMModel":
        other = LSTMModel(self.task, self.hidden, self.dense, seed=0,
                          norm=self.norm, provenance=dict(self.provenance),
                          history=list(self.history))
        other.set_params_flat(self.params_flat())
        return other


def _sigmoid(x):
    # split by sign for stability at large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pack(weights, biases) -> np.ndarray:
    parts = []
    for W, b in zip(weights, biases):
        parts.append(W.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def unpack(vec, weights, biases) -> None:
    vec = np.asarray(vec, dtype=float)
    total = sum(w.size + b.size for w, b in zip(weights, biases))
    if vec.size != total:
        raise ShapeMismatch(f"expected {total} weights, got {vec.size}")
    pos = 0
    for W, b in zip(weights, biases):
        W[...] = vec[pos:pos + W.size].reshape(W.shape)
        pos += W.size
        b[...] = vec[pos:pos + b.size]
        pos += b.size


def make_model(kind: str, task: ForecastTask, seed: int = 0,
               hidden=None, norm=None) -> ForecastModel:
    """Model factory. hidden: widths tuple for dnn, (hidden, dense) or a
    single int for lstm; None picks the defaults (512, 256) / (128, 128)."""
    if kind == "persistence":
        return PersistenceModel(task, norm)
    if kind == "dnn":
        return DNNModel(task, hidden or (512, 256), seed=seed, norm=norm)
    if kind == "lstm":
        if hidden is None:
            h, d = 128, 128
        elif np.isscalar(hidden):
            h = d = int(hidden)
        else:
            h, d = (int(x) for x in hidden)
        return LSTMModel(task, h, d, seed=seed, norm=norm)
    raise UnknownModel(f"unknown model kind {kind!r}")


def dnn_forward(model: ForecastModel, window) -> np.ndarray:
    if model.kind != "dnn":
        raise TaskMismatch(f"expected a dnn model, got {model.kind}")
    return model.forward(window)


def lstm_forward(model: ForecastModel, window) -> np.ndarray:
    if model.kind != "lstm":
        raise TaskMismatch(f"expected an lstm model, got {model.kind}")
    return model.forward(window)


def backward(model: ForecastModel, window, target):
    """Loss and exact gradient for a single sample."""
    if not hasattr(model, "backward_batch"):
        raise TaskMismatch(f"{model.kind} has no gradient")
    window = np.asarray(window, dtype=float)
    target = np.asarray(target, dtype=float)
    loss, grad = model.backward_batch(window[None], target[None])
    return loss, grad


def _topology(model: ForecastModel) -> dict:
    if model.kind == "dnn":
        return {"hidden": list(model.hidden)}
    if model.kind == "lstm":
        return {"hidden": model.hidden, "dense": model.dense}
    return {}


def save_model(model: ForecastModel, path) -> None:
    vec = model.params_flat()
    doc = {
        "format": FORMAT_TAG,
        "kind": model.kind,
        "task": model.task.to_dict(),
        "topology": _topology(model),
        "n_weights": int(vec.size),
        "weights_b64": base64.b64encode(vec.astype("<f8").tobytes()).decode("ascii"),
        "norm": model.norm.to_dict() if model.norm is not None else None,
        "provenance": model.provenance,
        "history": model.history,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path) -> ForecastModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: not a model container: {exc}") from exc
    if doc.get("format") != FORMAT_TAG:
        raise ParseError(f"{path}: unknown container format {doc.get('format')!r}")
    task = ForecastTask.from_dict(doc["task"])
    norm = NormalizationStats.from_dict(doc["norm"]) if doc.get("norm") else None
    kind = doc["kind"]
    topo = doc.get("topology", {})
    if kind == "dnn":
        model = DNNModel(task, tuple(topo["hidden"]), seed=0, norm=norm)
    elif kind == "lstm":
        model = LSTMModel(task, topo["hidden"], topo["dense"], seed=0, norm=norm)
    elif kind == "persistence":
        model = PersistenceModel(task, norm)
    else:
        raise UnknownModel(f"{path}: unknown model kind {kind!r}")
    raw = base64.b64decode(doc["weights_b64"])
    vec = np.frombuffer(raw, dtype="<f8").astype(float)
    if vec.size != doc.get("n_weights", vec.size):
        raise ShapeMismatch(
            f"{path}: container says {doc['n_weights']} weights, payload has {vec.size}")
    model.set_params_flat(vec)  # re-verifies length against topology
    model.provenance = doc.get("provenance", {"init": "random"})
    model.history = doc.get("history", [])
    return model
