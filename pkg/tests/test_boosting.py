import math
from dataclasses import replace

import numpy as np
import pytest

from intreg.boosting import (BoostConfig, clamp_left, exhaustive_grid, gbm_cv_select, grow_newton_tree,
                             leaf_weight, sample_grid, split_gain, train_gbm_aft, transform_targets_exp)
from intreg.data import Dataset
from intreg.losses import IntervalTarget, aft_grad_hess_array, aft_loss_array
from intreg.experiments import PATHOLOGY, left_censored_problem

INF = math.inf


def test_exp_transform():
    out = transform_targets_exp([IntervalTarget(-INF, 1), IntervalTarget(0, 0), IntervalTarget(1, INF)])
    assert (out[0].lower, out[0].upper) == (0.0, math.e)
    assert (out[1].lower, out[1].upper) == (1.0, 1.0)
    assert (out[2].lower, out[2].upper) == (math.e, INF)
    with pytest.raises(OverflowError):
        transform_targets_exp((np.array([800.0]), np.array([801.0])))


def test_clamp_left():
    np.testing.assert_array_equal(clamp_left([-INF, -INF, 1.0], [0.0, -9.0, 2.0], -5.0), [-5.0, -9.0, 1.0])


def test_leaf_weight_and_gain():
    assert leaf_weight(4.0, 1.0, 0.0, 1.0) == -2.0
    assert leaf_weight(4.0, 1.0, 1.0, 1.0) == -1.5
    assert leaf_weight(0.5, 1.0, 1.0, 1.0) == 0.0
    # gain of separating opposite gradients
    assert split_gain(-2.0, 1.0, 2.0, 1.0, 0.0, 0.0) == pytest.approx(4.0)


def test_newton_tree_respects_min_child_weight():
    X = np.arange(6.0)[:, None]
    g = np.array([-1, -1, -1, 1, 1, 1.0])
    h = np.ones(6)
    tree = grow_newton_tree(X, g, h, 3, 1.0, 0.0, 0.0)
    assert tree.feature[0] == 0 and tree.threshold[0] == 2.5
    none = grow_newton_tree(X, g, h, 3, 4.0, 0.0, 0.0)
    assert none.left[0] == -1


def _ds(lo, hi, n_feat=2, seed=0):
    X = np.random.default_rng(seed).uniform(-1, 1, (len(lo), n_feat))
    return Dataset("b", X, tuple(f"x{j}" for j in range(n_feat)), np.asarray(lo, float), np.asarray(hi, float))


def test_identical_uncensored_targets_converge_to_log_scale_value():
    # targets are in log space: (y, y) with y = log 3
    y = math.log(3.0)
    ds = _ds([y] * 30, [y] * 30)
    model = train_gbm_aft(ds, BoostConfig(learning_rate=0.5, n_rounds=60, reg_lambda=0.0, min_child_weight=0.0))
    np.testing.assert_allclose(model.predict(ds.features), y, atol=1e-3)


def test_zero_learning_rate_keeps_base_score():
    rng = np.random.default_rng(1)
    mid = rng.normal(size=40)
    ds = _ds(mid - 0.5, mid + 0.5)
    model = train_gbm_aft(ds, BoostConfig(learning_rate=0.0, n_rounds=5))
    np.testing.assert_array_equal(model.predict(ds.features), model.base_score)


def test_training_nll_decreases_on_average():
    rng = np.random.default_rng(2)
    mid = rng.normal(size=60)
    ds = _ds(mid - 0.5, mid + 0.5)
    model = train_gbm_aft(ds, BoostConfig(n_rounds=30, distribution="logistic"))
    assert model.train_nll[-1] < model.train_nll[0]


def test_left_censoring_drives_predictions_down():
    ds = left_censored_problem(seed=0)
    train, test = ds.subset(np.arange(160)), ds.subset(np.arange(160, 200))
    pred = train_gbm_aft(train, PATHOLOGY).predict(test.features)
    assert pred[test.features[:, 0] > 0].min() < -10
    clamped = train_gbm_aft(train, replace(PATHOLOGY, clamp_left_censored=-5.0)).predict(test.features)
    assert clamped.min() > -10


def test_single_leaf_newton_step_decreases_nll():
    rng = np.random.default_rng(4)
    for dist in ("normal", "logistic", "extreme"):
        lo = np.exp(rng.normal(size=30))
        hi = lo * np.exp(rng.uniform(0, 1, 30))
        spec = BoostConfig(distribution=dist).aft
        pred = np.zeros(30)
        g, h = aft_grad_hess_array(pred, lo, hi, spec)
        if np.any(h <= 1e-6):
            continue
        step = leaf_weight(g.sum(), h.sum(), 0.0, 0.0)
        assert aft_loss_array(pred + step, lo, hi, spec).sum() < aft_loss_array(pred, lo, hi, spec).sum()


def test_split_gain_matches_recomputation():
    rng = np.random.default_rng(5)
    for _ in range(100):
        g, h = rng.normal(size=20), rng.uniform(0.1, 2, 20)
        mask = rng.random(20) < 0.5
        alpha, lam = rng.uniform(0, 1), rng.uniform(0, 2)

        def obj(gs, hs):
            # best regularized second-order objective of one leaf
            w = leaf_weight(gs.sum(), hs.sum(), alpha, lam)
            return gs.sum() * w + 0.5 * (hs.sum() + lam) * w * w + alpha * abs(w)

        want = obj(g, h) - obj(g[mask], h[mask]) - obj(g[~mask], h[~mask])
        got = split_gain(g[mask].sum(), h[mask].sum(), g[~mask].sum(), h[~mask].sum(), alpha, lam)
        assert got == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("dist", ["normal", "logistic", "extreme"])
def test_small_learning_rate_nll_non_increasing(dist):
    rng = np.random.default_rng(6)
    mid = rng.normal(size=80)
    lo, hi = mid - 0.5, mid + 0.5
    hi[::4] = INF
    lo[1::4] = -INF
    model = train_gbm_aft(_ds(lo, hi), BoostConfig(learning_rate=0.1, n_rounds=30, distribution=dist))
    assert np.all(np.diff(model.train_nll) <= 1e-9)


def test_grid_sizes_and_sampling():
    # product of the grid sizes 4*9*5*6*6*6
    assert len(exhaustive_grid("normal", 1)) == 38_880
    a = sample_grid(20, seed=4)
    assert a == sample_grid(20, seed=4)
    assert len(set(a)) == 20
    assert {c.distribution for c in sample_grid(200, seed=0)} == {"normal", "logistic", "extreme"}


def test_cv_selection():
    rng = np.random.default_rng(3)
    mid = rng.normal(size=50)
    ds = _ds(mid - 0.5, mid + 0.5)
    model, info = gbm_cv_select(ds, seed=5, n_cells=6, n_rounds=10)
    assert info["cv_error"] <= info["cv_median"]
    assert info["n_cells"] == 6
    _, again = gbm_cv_select(ds, seed=5, n_cells=6, n_rounds=10)
    assert again == info
