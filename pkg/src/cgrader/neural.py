"""Minimal CNN and LSTM regressors with hand-derived backpropagation.

Everything runs in float64 so analytic gradients can be checked against
central finite differences. Training uses Adam with early stopping on
validation loss and restores the best weights.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class CnnSpec:
    conv_filters: int = 32
    kernel_size: int = 3
    stride: int = 1
    pool_size: int = 2
    dense_units: int = 64


@dataclass(frozen=True)
class LstmSpec:
    units: int = 128
    dropout: float = 0.2
    recurrent_dropout: float = 0.2
    dense_units: int = 64

    def __post_init__(self):
        if not (0 <= self.dropout < 1 and 0 <= self.recurrent_dropout < 1):
            raise ValueError("dropout rates must be in [0, 1)")


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    patience: int = 5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ValueError("batch_size, patience, max_epochs must be >= 1")


@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0  # 1-based
    stopped_epoch: int = 0


def mse_loss(pred, target):
    """Mean squared error and its gradient with respect to pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"length mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _relu(x):
    return np.maximum(x, 0.0)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class CnnRegressor:
    """Conv1d (valid, ReLU) -> max pool -> dense ReLU -> linear output."""

    def __init__(self, spec: CnnSpec, seq_len: int, dim: int, seed: int = 0):
        if seq_len < spec.kernel_size:
            raise ShapeError(
                f"sequence length {seq_len} shorter than kernel {spec.kernel_size}"
            )
        self.spec = spec
        self.seq_len = seq_len
        self.dim = dim
        self.conv_len = (seq_len - spec.kernel_size) // spec.stride + 1
        self.pool_len = self.conv_len // spec.pool_size
        if self.pool_len < 1:
            raise ShapeError("pooled length is zero; sequence too short")
        self.feature_len = self.pool_len * spec.conv_filters
        k, d, f, u = spec.kernel_size, dim, spec.conv_filters, spec.dense_units
        rng = np.random.default_rng(seed)
        self.params = {
            "conv_w": _glorot(rng, (k, d, f), k * d, f),
            "conv_b": np.zeros(f),
            "w1": _glorot(rng, (self.feature_len, u), self.feature_len, u),
            "b1": np.zeros(u),
            "w2": _glorot(rng, (u, 1), u, 1),
            "b2": np.zeros(1),
        }

    def forward(self, X, training: bool = False, rng=None, masks=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[1:] != (self.seq_len, self.dim):
            raise ShapeError(
                f"expected (batch, {self.seq_len}, {self.dim}), got {X.shape}"
            )
        p = self.params
        spec = self.spec
        stride = spec.stride
        pre = np.zeros((X.shape[0], self.conv_len, spec.conv_filters))
        for j in range(spec.kernel_size):
            window = X[:, j : j + stride * self.conv_len : stride, :]
            pre += window @ p["conv_w"][j]
        pre += p["conv_b"]
        act = _relu(pre)
        trimmed = act[:, : self.pool_len * spec.pool_size, :]
        windows = trimmed.reshape(
            X.shape[0], self.pool_len, spec.pool_size, spec.conv_filters
        )
        pool_arg = windows.argmax(axis=2)
        pooled = windows.max(axis=2)
        flat = pooled.reshape(X.shape[0], self.feature_len)
        h1 = _relu(flat @ p["w1"] + p["b1"])
        out = (h1 @ p["w2"] + p["b2"])[:, 0]
        cache = {"X": X, "pre": pre, "pool_arg": pool_arg, "flat": flat, "h1": h1}
        return out, cache

    def backward(self, cache, dout):
        p = self.params
        spec = self.spec
        X, pre, pool_arg = cache["X"], cache["pre"], cache["pool_arg"]
        flat, h1 = cache["flat"], cache["h1"]
        batch = X.shape[0]
        dout = np.asarray(dout, dtype=np.float64).reshape(batch, 1)
        grads = {}
        grads["w2"] = h1.T @ dout
        grads["b2"] = dout.sum(axis=0)
        dh1 = (dout @ p["w2"].T) * (h1 > 0)
        grads["w1"] = flat.T @ dh1
        grads["b1"] = dh1.sum(axis=0)
        dflat = dh1 @ p["w1"].T
        dpooled = dflat.reshape(batch, self.pool_len, spec.conv_filters)
        dwindows = np.zeros(
            (batch, self.pool_len, spec.pool_size, spec.conv_filters)
        )
        np.put_along_axis(dwindows, pool_arg[:, :, None, :], dpooled[:, :, None, :], axis=2)
        dact = np.zeros_like(pre)
        dact[:, : self.pool_len * spec.pool_size, :] = dwindows.reshape(
            batch, self.pool_len * spec.pool_size, spec.conv_filters
        )
        dpre = dact * (pre > 0)
        grads["conv_b"] = dpre.sum(axis=(0, 1))
        grads["conv_w"] = np.zeros_like(p["conv_w"])
        stride = spec.stride
        for j in range(spec.kernel_size):
            window = X[:, j : j + stride * self.conv_len : stride, :]
            grads["conv_w"][j] = np.einsum("btd,btf->df", window, dpre)
        return grads

    def features(self, X) -> np.ndarray:
        """Flatten-layer output feeding the first dense layer."""
        _, cache = self.forward(X, training=False)
        return cache["flat"]

    def predict(self, X) -> np.ndarray:
        out, _ = self.forward(X, training=False)
        return out


class LstmRegressor:
    """LSTM with per-sequence input/recurrent dropout, dense ReLU head.

    The output unit itself uses ReLU, so raw predictions are >= 0.
    """

    def __init__(self, spec: LstmSpec, seq_len: int, dim: int, seed: int = 0):
        if seq_len < 1:
            raise ShapeError("sequence length must be >= 1")
        self.spec = spec
        self.seq_len = seq_len
        self.dim = dim
        self.feature_len = spec.units
        h, d, u = spec.units, dim, spec.dense_units
        rng = np.random.default_rng(seed)
        self.params = {
            "wx": _glorot(rng, (d, 4 * h), d, h),
            "wh": _glorot(rng, (h, 4 * h), h, h),
            "b": np.zeros(4 * h),
            "w1": _glorot(rng, (h, u), h, u),
            "b1": np.zeros(u),
            "w2": _glorot(rng, (u, 1), u, 1),
            "b2": np.zeros(1),
        }

    def sample_masks(self, batch: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """One inverted-scaling dropout mask pair per sequence."""
        def mask(rate, width):
            if rate == 0:
                return np.ones((batch, width))
            keep = rng.random((batch, width)) >= rate
            return keep.astype(np.float64) / (1.0 - rate)

        return mask(self.spec.dropout, self.dim), mask(
            self.spec.recurrent_dropout, self.spec.units
        )

    def forward(self, X, training: bool = False, rng=None, masks=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[1:] != (self.seq_len, self.dim):
            raise ShapeError(
                f"expected (batch, {self.seq_len}, {self.dim}), got {X.shape}"
            )
        batch = X.shape[0]
        h_units = self.spec.units
        if training:
            if masks is None:
                if rng is None:
                    raise ValueError("training forward needs an rng or fixed masks")
                masks = self.sample_masks(batch, rng)
            mask_x, mask_h = masks
        else:
            mask_x = np.ones((batch, self.dim))
            mask_h = np.ones((batch, h_units))
        p = self.params
        h = np.zeros((batch, h_units))
        c = np.zeros((batch, h_units))
        steps = []
        for t in range(self.seq_len):
            xt = X[:, t, :] * mask_x
            hd = h * mask_h
            a = xt @ p["wx"] + hd @ p["wh"] + p["b"]
            gi = _sigmoid(a[:, :h_units])
            gf = _sigmoid(a[:, h_units : 2 * h_units])
            gg = np.tanh(a[:, 2 * h_units : 3 * h_units])
            go = _sigmoid(a[:, 3 * h_units :])
            c_prev = c
            c = gf * c_prev + gi * gg
            tanh_c = np.tanh(c)
            h = go * tanh_c
            steps.append((xt, hd, gi, gf, gg, go, c_prev, tanh_c))
        h1 = _relu(h @ p["w1"] + p["b1"])
        pre2 = h1 @ p["w2"] + p["b2"]
        out = _relu(pre2)[:, 0]
        cache = {
            "steps": steps,
            "h_final": h,
            "h1": h1,
            "pre2": pre2,
            "mask_x": mask_x,
            "mask_h": mask_h,
        }
        return out, cache

    def backward(self, cache, dout):
        p = self.params
        h_units = self.spec.units
        steps = cache["steps"]
        h1, pre2 = cache["h1"], cache["pre2"]
        mask_h = cache["mask_h"]
        batch = h1.shape[0]
        dout = np.asarray(dout, dtype=np.float64).reshape(batch, 1)
        grads = {name: np.zeros_like(arr) for name, arr in p.items()}
        dpre2 = dout * (pre2 > 0)
        grads["w2"] = h1.T @ dpre2
        grads["b2"] = dpre2.sum(axis=0)
        dh1 = (dpre2 @ p["w2"].T) * (h1 > 0)
        grads["w1"] = cache["h_final"].T @ dh1
        grads["b1"] = dh1.sum(axis=0)
        dh = dh1 @ p["w1"].T
        dc = np.zeros((batch, h_units))
        for xt, hd, gi, gf, gg, go, c_prev, tanh_c in reversed(steps):
            dgo = dh * tanh_c
            dc = dc + dh * go * (1.0 - tanh_c * tanh_c)
            dgi = dc * gg
            dgf = dc * c_prev
            dgg = dc * gi
            da = np.concatenate(
                [
                    dgi * gi * (1.0 - gi),
                    dgf * gf * (1.0 - gf),
                    dgg * (1.0 - gg * gg),
                    dgo * go * (1.0 - go),
                ],
                axis=1,
            )
            grads["wx"] += xt.T @ da
            grads["wh"] += hd.T @ da
            grads["b"] += da.sum(axis=0)
            dh = (da @ p["wh"].T) * mask_h
            dc = dc * gf
        return grads

    def features(self, X) -> np.ndarray:
        """Final hidden state (dropout off)."""
        _, cache = self.forward(X, training=False)
        return cache["h_final"]

    def predict(self, X) -> np.ndarray:
        out, _ = self.forward(X, training=False)
        return out


class Adam:
    def __init__(self, params: dict, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict):
        cfg = self.cfg
        self.t += 1
        for key in params:
            g = grads[key]
            self.m[key] = cfg.beta1 * self.m[key] + (1 - cfg.beta1) * g
            self.v[key] = cfg.beta2 * self.v[key] + (1 - cfg.beta2) * (g * g)
            m_hat = self.m[key] / (1 - cfg.beta1 ** self.t)
            v_hat = self.v[key] / (1 - cfg.beta2 ** self.t)
            params[key] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


def _dataset_loss(model, X, y, batch_size: int) -> float:
    total = 0.0
    for start in range(0, X.shape[0], batch_size):
        chunk = slice(start, start + batch_size)
        pred, _ = model.forward(X[chunk], training=False)
        diff = pred - y[chunk]
        total += float(np.sum(diff * diff))
    return total / X.shape[0]


def train(model, X_train, y_train, X_val, y_val, cfg: TrainConfig) -> TrainingHistory:
    """Adam + early stopping on validation MSE; best weights restored."""
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    X_val = np.asarray(X_val, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if X_train.shape[0] == 0 or X_val.shape[0] == 0:
        raise TrainingError("train and validation splits must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    adam = Adam(model.params, cfg)
    history = TrainingHistory()
    best_val = np.inf
    best_params = copy.deepcopy(model.params)
    bad_epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(X_train.shape[0])
        for start in range(0, perm.shape[0], cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            pred, cache = model.forward(X_train[batch], training=True, rng=rng)
            loss, dpred = mse_loss(pred, y_train[batch])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            grads = model.backward(cache, dpred)
            adam.step(model.params, grads)
        train_loss = _dataset_loss(model, X_train, y_train, cfg.batch_size)
        val_loss = _dataset_loss(model, X_val, y_val, cfg.batch_size)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.stopped_epoch = epoch
        if val_loss < best_val:
            best_val = val_loss
            history.best_epoch = epoch
            best_params = copy.deepcopy(model.params)
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break
    model.params = best_params
    return history


def extract_features(model, X) -> np.ndarray:
    return model.features(X)
