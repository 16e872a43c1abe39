import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intreg.base import cv_splits
from intreg.data import Dataset
from intreg.losses import HingeLossSpec, mean_squared_hinge_error
from intreg.mlp import (Adam, MlpConfig, forward, init_params, loss_and_grad, mlp_cv_errors, mlp_cv_select,
                        mlp_grid, train_mlp)


def _batch(rng, n=5, m=3):
    Z = rng.normal(size=(n, m))
    mid = rng.normal(0, 2, n)
    lo, hi = mid - 0.3, mid + 0.3
    hi[0] = math.inf
    lo[1] = -math.inf
    return Z, lo, hi


def grad_check(seed, layers, act, p):
    rng = np.random.default_rng(seed)
    Z, lo, hi = _batch(rng)
    cfg = MlpConfig(layers, 4, act)
    params = init_params(3, cfg, rng)
    spec = HingeLossSpec(p, 0.1)
    _, grads = loss_and_grad(params, Z, lo, hi, spec, act)
    h = 1e-6
    worst = 0.0
    for P, G in zip(params, grads):
        for idx in np.ndindex(P.shape):
            old = P[idx]
            P[idx] = old + h
            up = loss_and_grad(params, Z, lo, hi, spec, act)[0]
            P[idx] = old - h
            down = loss_and_grad(params, Z, lo, hi, spec, act)[0]
            P[idx] = old
            fd = (up - down) / (2 * h)
            worst = max(worst, abs(fd - G[idx]) / (max(abs(fd), abs(G[idx])) + 1e-8))
    return worst


@pytest.mark.parametrize("layers", [1, 2])
@pytest.mark.parametrize("act", ["relu", "sigmoid"])
def test_backprop_matches_finite_differences(layers, act):
    assert grad_check(0, layers, act, 2) < 1e-4


def test_linear_target_is_learnable():
    x = np.linspace(-1, 1, 40)
    ds = Dataset("lin", x[:, None], ("x",), x - 0.1, x + 0.1)
    cfg = MlpConfig(1, 10, "relu", learning_rate=0.01, max_epochs=2000, patience=2000, val_fraction=0.0)
    model = train_mlp(ds, cfg)
    assert mean_squared_hinge_error(model.predict(ds.features), (ds.lower, ds.upper)) < 1e-3


def test_vacuous_targets_give_zero_gradient():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(6, 2))
    lo, hi = np.full(6, -math.inf), np.full(6, math.inf)
    cfg = MlpConfig()
    params = init_params(2, cfg, rng)
    before = [p.copy() for p in params]
    value, grads = loss_and_grad(params, Z, lo, hi, HingeLossSpec(), "relu")
    Adam(params).step(params, grads)
    assert value == 0.0
    for a, b in zip(before, params):
        np.testing.assert_array_equal(a, b)


def test_config_validation_and_grid():
    assert len(mlp_grid()) == 12
    assert MlpConfig(2, 5).n_params(3) == 4 * 5 + 6 * 5 + 6
    with pytest.raises(ValueError):
        MlpConfig(activation="tanh")
    with pytest.raises(ValueError):
        MlpConfig(num_layers=0)


def _data(seed, n=50):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, (n, 2))
    mid = np.sin(X[:, 0])
    return Dataset("d", X, ("a", "b"), mid - 0.2, mid + 0.2)


def test_early_stopping_returns_best_snapshot():
    ds = _data(1)
    model = train_mlp(ds, MlpConfig(max_epochs=300, patience=10))
    assert model.best_epoch <= model.epochs_run
    assert model.epochs_run <= 300


def test_selection_is_argmin_and_deterministic():
    ds = _data(2)
    grid = mlp_grid(num_layers=(1,), hidden_sizes=(5, 10), activations=("relu",), max_epochs=100)
    model, info = mlp_cv_select(ds, seed=3, grid=grid)
    table = mlp_cv_errors(ds, [replace(c, seed=3) for c in grid], seed=3)
    assert info["cv_error"] == table.min()
    assert info["hidden_size"] == grid[int(np.argmin(table))].hidden_size
    _, again = mlp_cv_select(ds, seed=3, grid=grid)
    assert again == info
