import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from intreg.data import SynthSpec, generate_synthetic
from intreg.forest import compute_weights, train_mmif


def test_weight_examples():
    np.testing.assert_array_equal(compute_weights([1, 1, 2]), [0.4, 0.4, 0.2])
    np.testing.assert_allclose(compute_weights([3.0] * 4), 0.25)
    w = compute_weights([0.0, 1.0])
    assert w[0] == pytest.approx(1.0) and w[1] == pytest.approx(1e-12, rel=1e-6)
    with pytest.raises(ValueError):
        compute_weights([])


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=200))
def test_weights_sum_to_one(errors):
    w = compute_weights(errors)
    assert abs(w.sum() - 1.0) <= 1e-12
    assert np.all(w >= 0)


@pytest.fixture(scope="module")
def small():
    return generate_synthetic(SynthSpec("sin", 60, 6, 2))


def test_single_tree_forest(small):
    forest = train_mmif(small, n_trees=1, seed=0, per_tree_cv=False)
    Xq = np.random.default_rng(0).uniform(-10, 10, (50, 6))
    mb = forest.members[0]
    assert forest.weights[0] == 1.0
    np.testing.assert_array_equal(forest.predict(Xq), mb.tree.predict(Xq[:, mb.features]))


def test_subsampling_shape(small):
    forest = train_mmif(small, n_trees=5, seed=1, per_tree_cv=False)
    for mb in forest.members:
        assert mb.train_rows.size == 40 and mb.features.size == 2
        assert mb.oob_rows.size == 20
        assert not set(mb.train_rows) & set(mb.oob_rows)
    assert forest.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert len({tuple(mb.train_rows) for mb in forest.members}) > 1


@pytest.mark.parametrize("per_tree_cv", [False, True])
def test_seeded_determinism(small, per_tree_cv):
    Xq = np.random.default_rng(3).uniform(-10, 10, (40, 6))
    a = train_mmif(small, n_trees=4, seed=9, per_tree_cv=per_tree_cv).predict(Xq)
    b = train_mmif(small, n_trees=4, seed=9, per_tree_cv=per_tree_cv).predict(Xq)
    np.testing.assert_array_equal(a, b)


def test_json_export(small):
    import json
    d = json.loads(train_mmif(small, n_trees=2, seed=0, per_tree_cv=False).to_json())
    assert len(d["members"]) == 2 and math.isclose(sum(d["weights"]), 1.0)
