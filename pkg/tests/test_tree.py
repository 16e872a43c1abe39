import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_split
from intreg.baselines import train_constant
from intreg.data import Dataset, SynthSpec, generate_synthetic
from intreg.losses import mean_squared_hinge_error
from intreg.tree import MMIT_DEPTHS, MMIT_MIN_SAMPLES, mmit_cv_select, mmit_grid, split_search, train_mmit

INF = math.inf


def random_problem(rng, n=20, m=3):
    # rounded features give repeated values; mixed censoring
    X = np.round(rng.normal(size=(n, m)), 1)
    mid = 2 * X[:, 0] + rng.normal(0, 0.5, n)
    w = rng.uniform(0, 1, n)
    lo, hi = mid - w, mid + w
    kind = rng.integers(0, 4, n)
    hi[kind == 1] = INF
    lo[kind == 2] = -INF
    return X, lo, hi


def test_separable_split():
    X = np.array([[-2.0, 5.0], [-1.0, 3.0], [1.0, 4.0], [2.0, 3.5]])
    lo = np.array([-2.0, -2.0, 1.0, 1.0])
    hi = np.array([-1.0, -1.0, 2.0, 2.0])
    sp = split_search(X, lo, hi)
    assert sp.feature == 0 and sp.threshold == 0.0
    tree = train_mmit(Dataset("s", X, ("a", "b"), lo, hi), max_depth=1)
    assert np.all(tree.node_loss[tree.leaves()] == 0.0)


def test_identical_targets_do_not_split():
    X = np.random.default_rng(0).normal(size=(10, 2))
    assert split_search(X, np.ones(10), np.full(10, 2.0)) is None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]))
def test_split_matches_naive_enumeration(seed, min_leaf):
    X, lo, hi = random_problem(np.random.default_rng(seed))
    got = split_search(X, lo, hi, min_leaf=min_leaf)
    want = naive_split(X.tolist(), list(zip(lo.tolist(), hi.tolist())), min_leaf)
    if want is None:
        assert got is None
    else:
        assert (got.feature, got.threshold) == want[:2]
        assert got.gain == pytest.approx(want[2], rel=1e-9, abs=1e-9)


def _ds(X, lo, hi):
    return Dataset("t", X, tuple(f"x{j}" for j in range(X.shape[1])), lo, hi)


def test_depth_zero_is_constant():
    ds = _ds(*random_problem(np.random.default_rng(1), 40))
    tree = train_mmit(ds, max_depth=0)
    np.testing.assert_array_equal(tree.predict(ds.features), train_constant(ds).value)


def test_abs_training_error_below_constant():
    ds = generate_synthetic(SynthSpec("abs", 200, 20, 0))
    tree = train_mmit(ds, max_depth=INF, min_sample=2)
    tree_err = mean_squared_hinge_error(tree.predict(ds.features), (ds.lower, ds.upper))
    const_err = mean_squared_hinge_error(train_constant(ds).predict(ds.features), (ds.lower, ds.upper))
    assert tree_err < const_err


def test_piecewise_constant():
    ds = _ds(*random_problem(np.random.default_rng(2), 60))
    tree = train_mmit(ds, max_depth=3)
    Xq = np.random.default_rng(3).normal(size=(200, 3))
    leaf, pred = tree.apply(Xq), tree.predict(Xq)
    for nd in np.unique(leaf):
        assert np.unique(pred[leaf == nd]).size == 1
    assert set(np.unique(leaf)) <= set(tree.leaves())


@pytest.mark.parametrize("depth, min_sample", [(1, 0), (2, 8), (5, 16), (INF, 4)])
def test_truncation_equals_restricted_growth(depth, min_sample):
    ds = _ds(*random_problem(np.random.default_rng(4), 80))
    full = train_mmit(ds).truncated(depth, min_sample)
    direct = train_mmit(ds, depth, min_sample)
    Xq = np.random.default_rng(5).normal(size=(300, 3))
    np.testing.assert_array_equal(full.predict(Xq), direct.predict(Xq))
    assert full.to_dict() == direct.to_dict()


def test_cv_selection_is_grid_argmin_and_deterministic():
    ds = _ds(*random_problem(np.random.default_rng(6), 80))
    tree, info = mmit_cv_select(ds, seed=3)
    assert (info["max_depth"], info["min_sample"]) in mmit_grid()
    assert len(mmit_grid()) == len(MMIT_DEPTHS) * len(MMIT_MIN_SAMPLES)
    _, again = mmit_cv_select(ds, seed=3)
    assert info == again


def test_json_export():
    ds = _ds(*random_problem(np.random.default_rng(7), 30))
    d = json.loads(train_mmit(ds, max_depth=2).to_json())
    assert d["kind"] in ("leaf", "internal")
