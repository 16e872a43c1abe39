"""Featureless constant model and interval KNN.

Both reduce to the same leaf problem: choose the constant minimizing the
mean hinge loss over a finite set of candidates built from the finite
interval bounds and midpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import Regressor, cv_splits
from .data import Dataset, Standardizer, record_access
from .losses import SQUARED_HINGE, HingeLossSpec, IntervalTarget, bounds_of, hinge_loss_array


def candidate_set(lower, upper) -> np.ndarray:
    """Sorted, deduplicated {lower, upper, midpoint} of every fully finite interval."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    fin = np.isfinite(lower) & np.isfinite(upper)
    lo, hi = lower[fin], upper[fin]
    return np.unique(np.concatenate([lo, hi, 0.5 * (lo + hi)]))


def fallback_constant(lower, upper) -> float:
    """Leaf value when no interval has both bounds finite."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    fin_lo = lower[np.isfinite(lower)]
    if fin_lo.size:
        return float(fin_lo.max())
    fin_hi = upper[np.isfinite(upper)]
    if fin_hi.size:
        return float(fin_hi.min())
    return 0.0


def leaf_value(lower, upper, loss: HingeLossSpec = SQUARED_HINGE) -> tuple[float, float]:
    """Return ``(constant, mean loss)`` for one leaf; ties go to the smallest candidate."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.size == 0:
        raise ValueError("leaf value of an empty target set")
    cands = candidate_set(lower, upper)
    if cands.size == 0:
        c = fallback_constant(lower, upper)
        return c, float(np.mean(hinge_loss_array(c, lower, upper, loss)))
    costs = hinge_loss_array(cands[None, :], lower[:, None], upper[:, None], loss).mean(axis=0)
    j = int(np.argmin(costs))
    return float(cands[j]), float(costs[j])


def best_constant(targets: Sequence[IntervalTarget], loss: HingeLossSpec = SQUARED_HINGE) -> float:
    if len(targets) == 0:
        raise ValueError("best constant of an empty target set")
    lower, upper = bounds_of(targets)
    return leaf_value(lower, upper, loss)[0]


@dataclass(frozen=True)
class ConstantModel(Regressor):
    value: float

    def _predict(self, X):
        return np.full(X.shape[0], self.value)


def train_constant(train: Dataset, loss: HingeLossSpec = SQUARED_HINGE) -> ConstantModel:
    record_access(train)
    return ConstantModel(leaf_value(train.lower, train.upper, loss)[0])


# ---------------------------------------------------------------------------
# KNN

def _neighbor_order(Z_train: np.ndarray, Z_query: np.ndarray) -> np.ndarray:
    d2 = ((Z_query[:, None, :] - Z_train[None, :, :]) ** 2).sum(axis=2)
    # stable sort: equal distances keep ascending row order
    return np.argsort(d2, axis=1, kind="stable")


@dataclass(frozen=True, eq=False)
class KnnModel(Regressor):
    k: int
    scaler: Standardizer
    Z: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    loss: HingeLossSpec = SQUARED_HINGE

    def neighbors(self, X) -> np.ndarray:
        Zq = self.scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        return _neighbor_order(self.Z, Zq)[:, :self.k]

    def _predict(self, X):
        nb = self.neighbors(X)
        return np.array([leaf_value(self.lower[r], self.upper[r], self.loss)[0] for r in nb])


def train_knn(train: Dataset, k: int, loss: HingeLossSpec = SQUARED_HINGE) -> KnnModel:
    if not 1 <= k <= train.n:
        raise ValueError(f"k={k} outside 1..{train.n}")
    record_access(train)
    scaler = Standardizer.fit(train.features)
    return KnnModel(k, scaler, scaler.transform(train.features), train.lower, train.upper, loss)


def knn_grid(n: int) -> list[int]:
    return list(range(1, math.ceil(math.sqrt(n)) + 1))


def knn_cv_select(train: Dataset, seed, loss: HingeLossSpec = SQUARED_HINGE) -> tuple[KnnModel, dict]:
    """5-fold CV over K = 1..ceil(sqrt(n)); ties go to the smaller K."""
    grid = knn_grid(train.n)
    errors = np.zeros(len(grid))
    for tr, te in cv_splits(train, seed):
        base = train_knn(tr, 1, loss)
        order = _neighbor_order(base.Z, base.scaler.transform(te.features))
        for gi, k in enumerate(grid):
            kk = min(k, tr.n)
            preds = np.array([leaf_value(tr.lower[r[:kk]], tr.upper[r[:kk]], loss)[0] for r in order])
            errors[gi] += np.mean(hinge_loss_array(preds, te.lower, te.upper, SQUARED_HINGE))
    errors /= 5
    best = int(np.argmin(errors))
    k = grid[best]
    return train_knn(train, k, loss), {"k": k, "cv_error": float(errors[best])}
