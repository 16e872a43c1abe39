"""Fully connected network trained on the hinge interval loss with Adam."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .base import Regressor, cv_splits
from .data import Dataset, Standardizer, record_access
from .losses import SQUARED_HINGE, HingeLossSpec, hinge_loss_array, hinge_subgrad_array

NUM_LAYERS = (1, 2)
HIDDEN_SIZES = (5, 10, 20)
ACTIVATIONS = ("relu", "sigmoid")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpConfig:
    num_layers: int = 1
    hidden_size: int = 10
    activation: str = "relu"
    learning_rate: float = 0.001
    max_epochs: int = 1000
    patience: int = 50
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.num_layers < 1 or self.hidden_size < 1:
            raise ValueError("need at least one hidden layer of size >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")

    def n_params(self, n_inputs: int) -> int:
        h = self.hidden_size
        return (n_inputs + 1) * h + (self.num_layers - 1) * (h + 1) * h + h + 1


def mlp_grid(num_layers=NUM_LAYERS, hidden_sizes=HIDDEN_SIZES, activations=ACTIVATIONS, **kw) -> list[MlpConfig]:
    return [MlpConfig(L, h, a, **kw) for L, h, a in itertools.product(num_layers, hidden_sizes, activations)]


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return special.expit(z)


def _act_grad(z, a, kind):
    if kind == "relu":
        return (z > 0).astype(float)
    return a * (1.0 - a)


def init_params(n_inputs: int, config: MlpConfig, rng) -> list[np.ndarray]:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
    sizes = [n_inputs] + [config.hidden_size] * config.num_layers + [1]
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(rng.uniform(-bound, bound, size=fan_out))
    return params


def forward(params, Z, activation):
    """Output and per-layer (pre-activation, activation) cache."""
    a = Z
    cache = []
    n_hidden = len(params) // 2 - 1
    for i in range(n_hidden):
        z = a @ params[2 * i] + params[2 * i + 1]
        a_next = _act(z, activation)
        cache.append((a, z, a_next))
        a = a_next
    out = a @ params[-2] + params[-1]
    cache.append((a, None, None))
    return out[:, 0], cache


def loss_and_grad(params, Z, lower, upper, loss: HingeLossSpec, activation):
    """Mean hinge loss and its gradient w.r.t. every parameter array."""
    out, cache = forward(params, Z, activation)
    n = Z.shape[0]
    value = hinge_loss_array(out, lower, upper, loss).mean()
    delta = (hinge_subgrad_array(out, lower, upper, loss) / n)[:, None]
    grads = [None] * len(params)
    a_prev = cache[-1][0]
    grads[-2] = a_prev.T @ delta
    grads[-1] = delta.sum(axis=0)
    back = delta @ params[-2].T
    for i in range(len(cache) - 2, -1, -1):
        a_in, z, a_out = cache[i]
        dz = back * _act_grad(z, a_out, activation)
        grads[2 * i] = a_in.T @ dz
        grads[2 * i + 1] = dz.sum(axis=0)
        back = dz @ params[2 * i].T
    return value, grads


@dataclass(frozen=True, eq=False)
class MlpModel(Regressor):
    """Network acting on standardized features; the output is mapped back
    to target units by ``target_shift + target_scale * out``."""

    params: tuple
    config: MlpConfig
    scaler: Standardizer
    target_shift: float
    target_scale: float
    epochs_run: int = 0
    best_epoch: int = 0

    def _predict(self, X):
        out, _ = forward(self.params, self.scaler.transform(X), self.config.activation)
        return self.target_shift + self.target_scale * out


def target_scaling(lower, upper) -> tuple[float, float]:
    """Location/scale of the finite bounds, used to condition the output layer."""
    vals = np.concatenate([lower[np.isfinite(lower)], upper[np.isfinite(upper)]])
    if vals.size == 0:
        return 0.0, 1.0
    scale = float(vals.std())
    return float(vals.mean()), scale if scale > 0 else 1.0


class Adam:
    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train_mlp(train: Dataset, config: MlpConfig = MlpConfig(), loss: HingeLossSpec = SQUARED_HINGE) -> MlpModel:
    """Full-batch Adam with early stopping on a held-out validation split.

    Returns the parameters with the lowest validation loss seen (epoch 0,
    the initialization, included).
    """
    record_access(train)
    rng = np.random.default_rng(config.seed)
    scaler = Standardizer.fit(train.features)
    Z = scaler.transform(train.features)
    shift, scale = target_scaling(train.lower, train.upper)
    lower = (train.lower - shift) / scale
    upper = (train.upper - shift) / scale
    # the margin lives in target units
    loss_s = replace(loss, epsilon=loss.epsilon / scale)
    params = init_params(train.m, config, rng)

    n_val = int(round(config.val_fraction * train.n)) if train.n >= 5 else 0
    perm = rng.permutation(train.n)
    val, fit = perm[:n_val], perm[n_val:]
    Zf, lf, uf = Z[fit], lower[fit], upper[fit]
    Zv, lv, uv = Z[val], lower[val], upper[val]

    def val_loss(ps):
        if n_val == 0:
            return loss_and_grad(ps, Zf, lf, uf, loss_s, config.activation)[0]
        out, _ = forward(ps, Zv, config.activation)
        return hinge_loss_array(out, lv, uv, loss_s).mean()

    opt = Adam(params, lr=config.learning_rate)
    best = [p.copy() for p in params]
    best_val, best_epoch = val_loss(params), 0
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        value, grads = loss_and_grad(params, Zf, lf, uf, loss_s, config.activation)
        if not np.isfinite(value):
            raise TrainingDiverged(f"non-finite training loss at epoch {epoch} ({config})")
        opt.step(params, grads)
        v = val_loss(params)
        if v < best_val:
            best_val, best_epoch = v, epoch
            best = [p.copy() for p in params]
        elif epoch - best_epoch >= config.patience:
            break
    return MlpModel(tuple(best), config, scaler, shift, scale, epoch, best_epoch)


def mlp_cv_errors(train: Dataset, grid: list[MlpConfig], loss: HingeLossSpec = SQUARED_HINGE,
                  seed=0) -> np.ndarray:
    errors = np.zeros(len(grid))
    for tr, te in cv_splits(train, seed):
        for gi, cfg in enumerate(grid):
            pred = train_mlp(tr, cfg, loss).predict(te.features)
            errors[gi] += hinge_loss_array(pred, te.lower, te.upper, SQUARED_HINGE).mean()
    return errors / 5


def mlp_cv_select(train: Dataset, loss: HingeLossSpec = SQUARED_HINGE, seed=0,
                  grid: list[MlpConfig] | None = None) -> tuple[MlpModel, dict]:
    """5-fold CV over the configuration grid; ties go to fewer parameters."""
    record_access(train)
    grid = [replace(c, seed=int(seed) % 2**32) for c in (grid or mlp_grid())]
    errors = mlp_cv_errors(train, grid, loss, seed)
    best = min(range(len(grid)), key=lambda i: (errors[i], grid[i].n_params(train.m), i))
    cfg = grid[best]
    info = {"num_layers": cfg.num_layers, "hidden_size": cfg.hidden_size,
            "activation": cfg.activation, "cv_error": float(errors[best])}
    return train_mlp(train, cfg, loss), info
