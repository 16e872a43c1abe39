"""Maximum margin interval forest: MMITs on row/feature subsamples, combined
with weights inversely proportional to each tree's out-of-bag error."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .base import Regressor
from .data import Dataset, record_access
from .losses import SQUARED_HINGE, HingeLossSpec, mean_squared_hinge_error
from .tree import IntervalTree, mmit_cv_select, train_mmit

FOREST_DEPTHS = (2, 5, 10, 15, 20, 25)
FOREST_MIN_SPLIT = (2, 5, 10, 20, 50)
ERROR_FLOOR = 1e-12


def compute_weights(oob_errors) -> np.ndarray:
    e = np.maximum(np.asarray(oob_errors, dtype=float), ERROR_FLOOR)
    if e.size == 0:
        raise ValueError("no OOB errors to weight")
    inv = 1.0 / e
    return inv / inv.sum()


@dataclass(frozen=True, eq=False)
class ForestMember:
    tree: IntervalTree
    features: np.ndarray
    train_rows: np.ndarray
    oob_rows: np.ndarray
    oob_error: float
    params: dict


@dataclass(frozen=True, eq=False)
class IntervalForest(Regressor):
    members: tuple[ForestMember, ...]
    weights: np.ndarray

    def member_predictions(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([mb.tree.predict(X[:, mb.features]) for mb in self.members])

    def _predict(self, X):
        return self.weights @ self.member_predictions(X)

    def to_dict(self) -> dict:
        return {"weights": [float(w) for w in self.weights],
                "members": [{"features": mb.features.tolist(), "oob_error": mb.oob_error,
                             "weight": float(w), "params": _jsonable(mb.params), "tree": mb.tree.to_dict()}
                            for mb, w in zip(self.members, self.weights)]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _jsonable(params: dict) -> dict:
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in params.items()}


def member_seeds(seed, n_trees: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_trees)


def train_mmif(train: Dataset, n_trees: int = 100, loss: HingeLossSpec = SQUARED_HINGE, seed=0,
               per_tree_cv: bool = True, depths=FOREST_DEPTHS, min_split=FOREST_MIN_SPLIT) -> IntervalForest:
    """Fit the forest.

    Each tree sees floor(2n/3) rows drawn without replacement and ceil(m/3)
    features; the remaining rows are its OOB set.  With ``per_tree_cv`` the
    depth / min-split pair is cross-validated on every tree's own
    subsample, otherwise once on the full training set and shared.
    """
    if train.n < 5:
        raise ValueError(f"forest needs at least 5 rows, got {train.n}")
    record_access(train)
    n, m = train.n, train.m
    n_rows = (2 * n) // 3
    n_feat = math.ceil(m / 3)
    shared = None
    if not per_tree_cv:
        _, shared = mmit_cv_select(train, np.random.SeedSequence(seed).generate_state(1)[0],
                                   loss, depths, min_split)
    members = []
    for ss in member_seeds(seed, n_trees):
        rng = np.random.default_rng(ss)
        rows = np.sort(rng.choice(n, n_rows, replace=False))
        feats = np.sort(rng.choice(m, n_feat, replace=False))
        oob = np.setdiff1d(np.arange(n), rows)
        assert oob.size and not np.intersect1d(rows, oob).size
        sub = train.subset(rows).select_columns(feats)
        if shared is None:
            tree, params = mmit_cv_select(sub, int(rng.integers(2**32)), loss, depths, min_split)
        else:
            params = dict(shared)
            tree = train_mmit(sub, params["max_depth"], params["min_sample"], loss)
        oob_err = mean_squared_hinge_error(tree.predict(train.features[np.ix_(oob, feats)]),
                                           (train.lower[oob], train.upper[oob]))
        members.append(ForestMember(tree, feats, rows, oob, oob_err, params))
    weights = compute_weights([mb.oob_error for mb in members])
    return IntervalForest(tuple(members), weights)
