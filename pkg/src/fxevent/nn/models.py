"""Recurrent regression models: RNN, LSTM, BiLSTM and GRU with analytic BPTT.

All layers run batched over (batch, time, features) float64 arrays. The
concatenated-input formulation of each gate is realized as separate input and
recurrent weight matrices (x @ W + h_prev @ U + b), which is algebraically the
same with simpler shapes. The dense head reads the final hidden state of the top
layer; for bidirectional stacks that is the forward direction's last state
concatenated with the backward direction's last state.

Gradients here are exact; tests hold them to central finite differences at
1e-4 max relative error.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset, NormStats, invert_target
from ..errors import ConfigError
from .core import (
    AdamHyper,
    Dense,
    Param,
    adam_step,
    clip_global_norm,
    load_params,
    mse_loss,
    save_params,
    sigmoid,
    zero_grads,
)

KINDS = ("rnn", "lstm", "bilstm", "gru")


@dataclass(frozen=True)
class ModelConfig:
    kind: str  # one of KINDS; "bilstm" is an LSTM cell run in both directions
    n_timesteps: int
    input_dim: int = 28
    layers: int = 2
    hidden: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}, expected one of {KINDS}")
        if self.layers < 1 or self.hidden < 1 or self.n_timesteps < 1 or self.input_dim < 1:
            raise ConfigError("layers, hidden, n_timesteps and input_dim must all be >= 1")

    @property
    def bidirectional(self) -> bool:
        return self.kind == "bilstm"

    @property
    def cell(self) -> str:
        return "lstm" if self.kind == "bilstm" else self.kind


@dataclass
class TrainHyper:
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    clip_norm: float = 5.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainReport:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    wall_time_s: float = 0.0


def _uniform(rng, fan_in, shape):
    limit = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


class RNNLayer:
    """h_t = tanh(x_t @ W + h_{t-1} @ U + b)"""

    def __init__(self, input_dim, hidden, rng, name):
        self.hidden = hidden
        self.W = Param(f"{name}.W", _uniform(rng, input_dim, (input_dim, hidden)))
        self.U = Param(f"{name}.U", _uniform(rng, hidden, (hidden, hidden)))
        self.b = Param(f"{name}.b", np.zeros(hidden))
        self._cache = None

    def params(self):
        return [self.W, self.U, self.b]

    def forward(self, x):
        B, T, D = x.shape
        if D != self.W.value.shape[0]:
            raise ConfigError(f"{self.W.name}: expected input dim {self.W.value.shape[0]}, got {D}")
        h = np.zeros((B, self.hidden))
        hs = np.empty((B, T, self.hidden))
        for t in range(T):
            h = np.tanh(x[:, t] @ self.W.value + h @ self.U.value + self.b.value)
            hs[:, t] = h
        self._cache = (x, hs)
        return hs

    def backward(self, dh_seq):
        x, hs = self._cache
        B, T, _ = x.shape
        dx = np.empty_like(x)
        carry = np.zeros((B, self.hidden))
        for t in range(T - 1, -1, -1):
            h_t = hs[:, t]
            h_prev = hs[:, t - 1] if t > 0 else np.zeros((B, self.hidden))
            da = (dh_seq[:, t] + carry) * (1.0 - h_t * h_t)
            self.W.grad += x[:, t].T @ da
            self.U.grad += h_prev.T @ da
            self.b.grad += da.sum(axis=0)
            dx[:, t] = da @ self.W.value.T
            carry = da @ self.U.value.T
        return dx


class LSTMLayer:
    """Gated cell: f, i, o sigmoid gates, tanh candidate, additive cell state."""

    GATES = ("f", "i", "c", "o")

    def __init__(self, input_dim, hidden, rng, name):
        self.hidden = hidden
        self.W, self.U, self.b = {}, {}, {}
        for g in self.GATES:
            self.W[g] = Param(f"{name}.W{g}", _uniform(rng, input_dim, (input_dim, hidden)))
            self.U[g] = Param(f"{name}.U{g}", _uniform(rng, hidden, (hidden, hidden)))
            # forget-gate bias starts open so early training can retain state
            self.b[g] = Param(f"{name}.b{g}", np.full(hidden, 1.0 if g == "f" else 0.0))
        self._cache = None

    def params(self):
        out = []
        for g in self.GATES:
            out += [self.W[g], self.U[g], self.b[g]]
        return out

    def step(self, x_t, h_prev, c_prev):
        """Single timestep; returns (h, C) plus the gate activations for BPTT."""
        pre = {
            g: x_t @ self.W[g].value + h_prev @ self.U[g].value + self.b[g].value
            for g in self.GATES
        }
        f = sigmoid(pre["f"])
        i = sigmoid(pre["i"])
        o = sigmoid(pre["o"])
        c_bar = np.tanh(pre["c"])
        C = f * c_prev + i * c_bar
        tC = np.tanh(C)
        h = o * tC
        return h, C, (f, i, o, c_bar, tC)

    def forward(self, x):
        B, T, D = x.shape
        if D != self.W["f"].value.shape[0]:
            raise ConfigError(
                f"{self.W['f'].name}: expected input dim {self.W['f'].value.shape[0]}, got {D}"
            )
        h = np.zeros((B, self.hidden))
        C = np.zeros((B, self.hidden))
        hs = np.empty((B, T, self.hidden))
        cells = []
        for t in range(T):
            h, C, gates = self.step(x[:, t], h, C)
            hs[:, t] = h
            cells.append((C, gates))
        self._cache = (x, hs, cells)
        return hs

    def backward(self, dh_seq):
        x, hs, cells = self._cache
        B, T, _ = x.shape
        H = self.hidden
        dx = np.empty_like(x)
        dh_carry = np.zeros((B, H))
        dC_carry = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            C_t, (f, i, o, c_bar, tC) = cells[t]
            h_prev = hs[:, t - 1] if t > 0 else np.zeros((B, H))
            C_prev = cells[t - 1][0] if t > 0 else np.zeros((B, H))
            dh = dh_seq[:, t] + dh_carry
            da_o = dh * tC * o * (1.0 - o)
            dC = dC_carry + dh * o * (1.0 - tC * tC)
            da_f = dC * C_prev * f * (1.0 - f)
            da_i = dC * c_bar * i * (1.0 - i)
            da_c = dC * i * (1.0 - c_bar * c_bar)
            dC_carry = dC * f
            dh_carry = np.zeros((B, H))
            dx_t = np.zeros_like(x[:, t])
            for g, da in (("f", da_f), ("i", da_i), ("c", da_c), ("o", da_o)):
                self.W[g].grad += x[:, t].T @ da
                self.U[g].grad += h_prev.T @ da
                self.b[g].grad += da.sum(axis=0)
                dx_t += da @ self.W[g].value.T
                dh_carry += da @ self.U[g].value.T
            dx[:, t] = dx_t
        return dx


class GRULayer:
    """Reset/update gated cell; the carry term uses h_{t-1} (standard recurrence)."""

    GATES = ("r", "z", "h")

    def __init__(self, input_dim, hidden, rng, name):
        self.hidden = hidden
        self.W, self.U, self.b = {}, {}, {}
        for g in self.GATES:
            self.W[g] = Param(f"{name}.W{g}", _uniform(rng, input_dim, (input_dim, hidden)))
            self.U[g] = Param(f"{name}.U{g}", _uniform(rng, hidden, (hidden, hidden)))
            self.b[g] = Param(f"{name}.b{g}", np.zeros(hidden))
        self._cache = None

    def params(self):
        out = []
        for g in self.GATES:
            out += [self.W[g], self.U[g], self.b[g]]
        return out

    def step(self, x_t, h_prev):
        r = sigmoid(x_t @ self.W["r"].value + h_prev @ self.U["r"].value + self.b["r"].value)
        z = sigmoid(x_t @ self.W["z"].value + h_prev @ self.U["z"].value + self.b["z"].value)
        rh = r * h_prev
        h_bar = np.tanh(x_t @ self.W["h"].value + rh @ self.U["h"].value + self.b["h"].value)
        h = (1.0 - z) * h_prev + z * h_bar
        return h, (r, z, rh, h_bar)

    def forward(self, x):
        B, T, D = x.shape
        if D != self.W["r"].value.shape[0]:
            raise ConfigError(
                f"{self.W['r'].name}: expected input dim {self.W['r'].value.shape[0]}, got {D}"
            )
        h = np.zeros((B, self.hidden))
        hs = np.empty((B, T, self.hidden))
        gates = []
        for t in range(T):
            h, g = self.step(x[:, t], h)
            hs[:, t] = h
            gates.append(g)
        self._cache = (x, hs, gates)
        return hs

    def backward(self, dh_seq):
        x, hs, gates = self._cache
        B, T, _ = x.shape
        H = self.hidden
        dx = np.empty_like(x)
        carry = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            r, z, rh, h_bar = gates[t]
            h_prev = hs[:, t - 1] if t > 0 else np.zeros((B, H))
            dh = dh_seq[:, t] + carry
            da_z = dh * (h_bar - h_prev) * z * (1.0 - z)
            da_h = dh * z * (1.0 - h_bar * h_bar)
            dh_prev = dh * (1.0 - z)
            drh = da_h @ self.U["h"].value.T
            da_r = drh * h_prev * r * (1.0 - r)
            dh_prev += drh * r
            dh_prev += da_r @ self.U["r"].value.T + da_z @ self.U["z"].value.T
            dx[:, t] = (
                da_r @ self.W["r"].value.T
                + da_z @ self.W["z"].value.T
                + da_h @ self.W["h"].value.T
            )
            for g, da, rec_in in (("r", da_r, h_prev), ("z", da_z, h_prev), ("h", da_h, rh)):
                self.W[g].grad += x[:, t].T @ da
                self.U[g].grad += rec_in.T @ da
                self.b[g].grad += da.sum(axis=0)
            carry = dh_prev
        return dx


class BidirectionalLayer:
    """Runs one cell layer forward in time and a second one on the reversed
    sequence; outputs are concatenated per timestep (forward half first)."""

    def __init__(self, fwd, bwd):
        self.fwd = fwd
        self.bwd = bwd
        self.hidden = fwd.hidden

    def params(self):
        return self.fwd.params() + self.bwd.params()

    def forward(self, x):
        out_f = self.fwd.forward(x)
        out_b = self.bwd.forward(x[:, ::-1])[:, ::-1]
        return np.concatenate([out_f, out_b], axis=2)

    def backward(self, dout):
        H = self.hidden
        dx_f = self.fwd.backward(np.ascontiguousarray(dout[:, :, :H]))
        dx_b = self.bwd.backward(np.ascontiguousarray(dout[:, ::-1, H:]))[:, ::-1]
        return dx_f + dx_b


_CELLS = {"rnn": RNNLayer, "lstm": LSTMLayer, "gru": GRULayer}


class RecurrentModel:
    """Stack of recurrent layers plus a linear head producing one scalar per window."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.stats_fingerprint: str | None = None
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0)))
        cell_cls = _CELLS[config.cell]
        width = 2 if config.bidirectional else 1
        self.layers = []
        in_dim = config.input_dim
        for l in range(config.layers):
            if config.bidirectional:
                fwd = cell_cls(in_dim, config.hidden, rng, f"layer{l}.fwd")
                bwd = cell_cls(in_dim, config.hidden, rng, f"layer{l}.bwd")
                self.layers.append(BidirectionalLayer(fwd, bwd))
            else:
                self.layers.append(cell_cls(in_dim, config.hidden, rng, f"layer{l}"))
            in_dim = config.hidden * width
        self.head = Dense(in_dim, 1, rng, name="head")

    def params(self) -> list[Param]:
        out = []
        for layer in self.layers:
            out += layer.params()
        return out + self.head.params()

    def forward_batch(self, X: np.ndarray) -> np.ndarray:
        """(B, T, D) windows -> (B,) predictions."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[1] != self.config.n_timesteps or X.shape[2] != self.config.input_dim:
            raise ConfigError(
                f"expected windows of shape (*, {self.config.n_timesteps}, "
                f"{self.config.input_dim}), got {X.shape}"
            )
        seq = X
        for layer in self.layers:
            seq = layer.forward(seq)
        self._top_shape = seq.shape
        if self.config.bidirectional:
            H = self.config.hidden
            head_in = np.concatenate([seq[:, -1, :H], seq[:, 0, H:]], axis=1)
        else:
            head_in = seq[:, -1]
        return self.head.forward(head_in)[:, 0]

    def backward_batch(self, dpred: np.ndarray) -> None:
        """Accumulate parameter gradients for the last forward_batch call."""
        dhead_in = self.head.backward(np.asarray(dpred, dtype=np.float64).reshape(-1, 1))
        dseq = np.zeros(self._top_shape)
        if self.config.bidirectional:
            H = self.config.hidden
            dseq[:, -1, :H] = dhead_in[:, :H]
            dseq[:, 0, H:] = dhead_in[:, H:]
        else:
            dseq[:, -1] = dhead_in
        for layer in reversed(self.layers):
            dseq = layer.backward(dseq)

    def forward(self, window: np.ndarray) -> float:
        """Single window -> scalar prediction."""
        return float(self.forward_batch(np.asarray(window)[None])[0])


def loss_closures(model: RecurrentModel, windows: np.ndarray, targets: np.ndarray):
    """(loss_fn, backward_fn) pair over fixed data, as grad_check expects."""

    def loss_fn():
        pred = model.forward_batch(windows)
        return mse_loss(pred, targets)[0]

    def backward_fn():
        pred = model.forward_batch(windows)
        _, dpred = mse_loss(pred, targets)
        model.backward_batch(dpred)

    return loss_fn, backward_fn


def train(
    train_ds: Dataset,
    val_fraction: float,
    config: ModelConfig,
    hyper: TrainHyper = TrainHyper(),
) -> tuple[RecurrentModel, TrainReport]:
    """Mini-batch Adam on MSE with a chronological validation split and early stopping.

    The last round(val_fraction * n) samples form the validation set. Training
    restores the parameters of the best validation epoch. Deterministic for a
    fixed (data, config.seed, hyper).
    """
    if len(train_ds) == 0:
        raise ConfigError("cannot train on an empty dataset")
    if not 0.0 <= val_fraction < 1.0:
        raise ConfigError(f"val_fraction must be in [0, 1), got {val_fraction}")
    X = train_ds.windows()
    y = train_ds.targets()
    n_val = int(round(len(y) * val_fraction))
    n_val = min(n_val, len(y) - 1)
    X_tr, y_tr = (X[:-n_val], y[:-n_val]) if n_val else (X, y)
    X_val, y_val = (X[-n_val:], y[-n_val:]) if n_val else (None, None)

    model = RecurrentModel(config)
    params = model.params()
    adam = AdamHyper(lr=hyper.lr, beta1=hyper.beta1, beta2=hyper.beta2, eps=hyper.eps)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1)))
    report = TrainReport()
    started = time.perf_counter()

    best_monitor = np.inf
    best_values = [p.value.copy() for p in params]
    stale = 0
    for epoch in range(hyper.max_epochs):
        order = shuffle_rng.permutation(len(y_tr))
        sq_sum = 0.0
        for lo in range(0, len(order), hyper.batch_size):
            batch = order[lo : lo + hyper.batch_size]
            zero_grads(params)
            pred = model.forward_batch(X_tr[batch])
            loss, dpred = mse_loss(pred, y_tr[batch])
            if not np.isfinite(loss):
                norm = float(np.sqrt(sum(np.sum(p.value**2) for p in params)))
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch offset {lo} "
                    f"(parameter norm {norm:.3e})"
                )
            model.backward_batch(dpred)
            clip_global_norm(params, hyper.clip_norm)
            adam_step(params, adam)
            sq_sum += loss * len(batch)
        train_loss = sq_sum / len(y_tr)
        report.train_losses.append(train_loss)

        if n_val:
            val_loss = mse_loss(model.forward_batch(X_val), y_val)[0]
            report.val_losses.append(val_loss)
            monitor = val_loss
        else:
            monitor = train_loss
        report.epochs_run = epoch + 1

        if monitor < best_monitor:
            best_monitor = monitor
            report.best_epoch = epoch
            best_values = [p.value.copy() for p in params]
            stale = 0
        else:
            stale += 1
            if stale > hyper.patience:
                break

    for p, v in zip(params, best_values):
        p.value[...] = v
    if train_ds.norm_fingerprint is not None:
        model.stats_fingerprint = train_ds.norm_fingerprint
    report.wall_time_s = time.perf_counter() - started
    return model, report


def predict(model: RecurrentModel, ds: Dataset, stats: NormStats) -> np.ndarray:
    """Raw-price predictions, one per sample in order.

    The dataset must have been normalized with exactly these stats; fingerprints
    are compared to catch train/serve skew.
    """
    if ds.norm_fingerprint != stats.fingerprint:
        raise ConfigError(
            f"dataset normalized with stats {ds.norm_fingerprint}, got {stats.fingerprint}"
        )
    if model.stats_fingerprint is not None and model.stats_fingerprint != stats.fingerprint:
        raise ConfigError(
            f"model trained with stats {model.stats_fingerprint}, got {stats.fingerprint}"
        )
    if len(ds) == 0:
        return np.zeros(0)
    return invert_target(model.forward_batch(ds.windows()), stats)


def save_model(model: RecurrentModel, path) -> None:
    """Text format: a config/fingerprint header followed by the parameter blocks."""
    cfg = model.config
    header = {
        "kind": cfg.kind,
        "n_timesteps": cfg.n_timesteps,
        "input_dim": cfg.input_dim,
        "layers": cfg.layers,
        "hidden": cfg.hidden,
        "seed": cfg.seed,
    }
    with open(path, "w") as fh:
        fh.write("fxevent-model v1\n")
        fh.write("config " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(f"stats_fingerprint {model.stats_fingerprint or '-'}\n")
        params = model.params()
        fh.write(f"params {len(params)}\n")
        save_params(params, fh)


def load_model(path) -> RecurrentModel:
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "fxevent-model v1":
            raise ConfigError(f"{path}: not a model file (header {magic!r})")
        cfg_line = fh.readline().strip()
        if not cfg_line.startswith("config "):
            raise ConfigError(f"{path}: missing config line")
        cfg = json.loads(cfg_line[len("config ") :])
        fp_line = fh.readline().split()
        n_line = fh.readline().split()
        model = RecurrentModel(ModelConfig(**cfg))
        params = model.params()
        if len(n_line) != 2 or int(n_line[1]) != len(params):
            raise ConfigError(f"{path}: parameter count mismatch")
        load_params(params, fh)
        if fp_line[1] != "-":
            model.stats_fingerprint = fp_line[1]
    return model
