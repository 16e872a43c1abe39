"""Maximum margin interval trees.

CART-style greedy growth where every node's value is the best constant of
its targets (see :func:`intreg.baselines.leaf_value`) and the split
criterion is the decrease in summed hinge loss.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .base import Regressor, cv_splits
from .baselines import candidate_set, fallback_constant, leaf_value
from .data import Dataset, record_access
from .losses import SQUARED_HINGE, HingeLossSpec, hinge_loss_array

MIN_GAIN = 1e-12
# gains closer than this (relative to the parent cost) count as ties
TIE_RTOL = 1e-9

MMIT_DEPTHS = (0, 1, 5, 10, 20, math.inf)
MMIT_MIN_SAMPLES = (0, 1, 2, 4, 8, 16, 20)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


class _LeafCosts:
    """Per-sample losses against every candidate of a target collection."""

    def __init__(self, lower, upper, loss):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.loss = loss
        self.cands = candidate_set(self.lower, self.upper)
        self.matrix = hinge_loss_array(self.cands[None, :], self.lower[:, None], self.upper[:, None], loss)
        # column indices each sample contributes to the candidate set (-1 = none)
        fin = np.isfinite(self.lower) & np.isfinite(self.upper)
        gen = np.full((self.lower.size, 3), -1, dtype=np.int64)
        if self.cands.size:
            lo, hi = self.lower[fin], self.upper[fin]
            gen[fin, 0] = np.searchsorted(self.cands, lo)
            gen[fin, 1] = np.searchsorted(self.cands, hi)
            gen[fin, 2] = np.searchsorted(self.cands, 0.5 * (lo + hi))
        self.gen = gen


def _prefix_costs(M, gen, orders, lower, upper, loss):
    """cost[f, k] = best summed loss of the first k+1 samples in ``orders[f]``.

    Only candidates generated by samples inside the prefix are eligible;
    prefixes without any fully finite interval use the fallback constant.
    """
    F, n = orders.shape
    C = M.shape[1]
    cum = np.cumsum(M[orders], axis=1)
    rank = np.empty_like(orders)
    np.put_along_axis(rank, orders, np.arange(n)[None, :], axis=1)
    pair_row, pair_slot = np.nonzero(gen >= 0)
    first = np.full((F, C), n, dtype=np.int64)
    if pair_row.size:
        pair_col = gen[pair_row, pair_slot]
        srt = np.argsort(pair_col, kind="stable")
        pair_col, pair_row = pair_col[srt], pair_row[srt]
        starts = np.flatnonzero(np.r_[True, pair_col[1:] != pair_col[:-1]])
        first[:, pair_col[starts]] = np.minimum.reduceat(rank[:, pair_row], starts, axis=1)
    avail = np.arange(n)[None, :, None] >= first[:, None, :]
    cost = np.where(avail, cum, np.inf).min(axis=2, initial=np.inf)
    for f in np.flatnonzero(np.isinf(cost).any(axis=1)):
        # prefixes without a finite interval form a leading run
        K = int(np.isinf(cost[f]).sum())
        idx = orders[f, :K]
        lo, hi = lower[idx], upper[idx]
        run_lo = np.maximum.accumulate(np.where(np.isfinite(lo), lo, -np.inf))
        run_hi = np.minimum.accumulate(np.where(np.isfinite(hi), hi, np.inf))
        c = np.where(np.isfinite(run_lo), run_lo, np.where(np.isfinite(run_hi), run_hi, 0.0))
        L = hinge_loss_array(c[:, None], lo[None, :], hi[None, :], loss)
        cost[f, :K] = np.tril(L).sum(axis=1)
    return cost


# bound on the (features x rows x candidates) work array
_CHUNK_CELLS = 4_000_000


def split_search(X, lower, upper, loss: HingeLossSpec = SQUARED_HINGE, min_leaf: int = 1,
                 costs: _LeafCosts | None = None, rows=None) -> Split | None:
    """Best (feature, threshold) split of the given rows, or None.

    Thresholds are midpoints between consecutive distinct values.  Among
    gains within tolerance of the best, the lowest feature index and then
    the lowest threshold wins.
    """
    X = np.asarray(X, dtype=float)
    if costs is None:
        costs = _LeafCosts(lower, upper, loss)
    rows = np.arange(X.shape[0]) if rows is None else np.asarray(rows)
    n = rows.size
    if n < 2:
        return None
    lo_n, hi_n = costs.lower[rows], costs.upper[rows]
    gen = costs.gen[rows]
    cols = np.unique(gen[gen >= 0])
    M = costs.matrix[np.ix_(rows, cols)]
    remap = np.full(costs.cands.size + 1, -1, dtype=np.int64)
    remap[cols] = np.arange(cols.size)
    gen = np.where(gen >= 0, remap[gen], -1)
    parent = leaf_value(lo_n, hi_n, loss)[1] * n
    tie = TIE_RTOL * max(1.0, parent)

    Xn = X[rows]
    orders = np.argsort(Xn, axis=0, kind="stable").T
    xs = np.take_along_axis(Xn.T, orders, axis=1)
    rev = orders[:, ::-1]
    chunk = max(1, _CHUNK_CELLS // max(1, n * max(1, cols.size)))
    left = np.empty(orders.shape)
    right = np.empty(orders.shape)
    for a in range(0, orders.shape[0], chunk):
        b = a + chunk
        left[a:b] = _prefix_costs(M, gen, orders[a:b], lo_n, hi_n, loss)
        right[a:b] = _prefix_costs(M, gen, rev[a:b], lo_n, hi_n, loss)[:, ::-1]
    # split after sorted position k: left = 0..k, right = k+1..n-1
    gains = parent - (left[:, :-1] + right[:, 1:])
    k = np.arange(n - 1)
    ok = (xs[:, :-1] < xs[:, 1:]) & (k + 1 >= min_leaf) & (n - k - 1 >= min_leaf)
    gains = np.where(ok, gains, -np.inf)
    best_gain = gains.max()
    if not best_gain > MIN_GAIN:
        return None
    # row-major scan: lowest feature first, then lowest threshold
    f, pos = np.unravel_index(np.flatnonzero((gains >= best_gain - tie).ravel())[0], gains.shape)
    best = Split(int(f), 0.5 * (xs[f, pos] + xs[f, pos + 1]), float(gains[f, pos]))
    # recompute the winning gain directly to drop cumulative-sum rounding
    mask = Xn[:, best.feature] <= best.threshold
    exact = parent - (leaf_value(lo_n[mask], hi_n[mask], loss)[1] * mask.sum()
                      + leaf_value(lo_n[~mask], hi_n[~mask], loss)[1] * (~mask).sum())
    if exact <= MIN_GAIN:
        return None
    return Split(best.feature, best.threshold, float(exact))


@dataclass(frozen=True, eq=False)
class IntervalTree(Regressor):
    """Flattened tree.  Every node stores a value so the tree can be read
    back at any depth / minimum split size (``max_depth``, ``min_sample``)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    node_loss: np.ndarray
    n_samples: np.ndarray
    depth: np.ndarray
    max_depth: float = math.inf
    min_sample: int = 0

    def truncated(self, max_depth=math.inf, min_sample=0) -> "IntervalTree":
        return IntervalTree(self.feature, self.threshold, self.left, self.right, self.value,
                            self.node_loss, self.n_samples, self.depth, max_depth, min_sample)

    def _expands(self, node):
        return ((self.left[node] >= 0) & (self.depth[node] < self.max_depth)
                & (self.n_samples[node] >= max(self.min_sample, 2)))

    def apply(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self._expands(node)
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self._expands(node[idx])
        return node

    def _predict(self, X):
        return self.value[self.apply(X)]

    def leaves(self) -> np.ndarray:
        reach = [0]
        out = []
        while reach:
            nd = reach.pop()
            if self._expands(np.array([nd]))[0]:
                reach += [int(self.right[nd]), int(self.left[nd])]
            else:
                out.append(nd)
        return np.array(sorted(out))

    def to_dict(self, node: int = 0) -> dict:
        if not self._expands(np.array([node]))[0]:
            return {"kind": "leaf", "value": float(self.value[node]),
                    "loss": float(self.node_loss[node]), "n_samples": int(self.n_samples[node])}
        return {"kind": "internal", "feature": int(self.feature[node]),
                "threshold": float(self.threshold[node]), "value": float(self.value[node]),
                "left": self.to_dict(int(self.left[node])), "right": self.to_dict(int(self.right[node]))}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def grow_tree(X, lower, upper, loss: HingeLossSpec = SQUARED_HINGE, max_depth=math.inf,
              min_sample: int = 0) -> IntervalTree:
    """Greedy growth; a node is split only if it holds >= max(min_sample, 2) rows."""
    X = np.asarray(X, dtype=float)
    costs = _LeafCosts(lower, upper, loss)
    feature, threshold, left, right, value, node_loss, n_samples, depth = ([] for _ in range(8))

    def new_node(rows, d):
        v, l = leaf_value(costs.lower[rows], costs.upper[rows], loss)
        for lst, item in ((feature, -1), (threshold, np.nan), (left, -1), (right, -1),
                          (value, v), (node_loss, l), (n_samples, rows.size), (depth, d)):
            lst.append(item)
        return len(value) - 1

    stack = [(new_node(np.arange(X.shape[0]), 0), np.arange(X.shape[0]))]
    while stack:
        nd, rows = stack.pop()
        if depth[nd] >= max_depth or rows.size < max(min_sample, 2):
            continue
        sp = split_search(X, None, None, loss, costs=costs, rows=rows)
        if sp is None:
            continue
        mask = X[rows, sp.feature] <= sp.threshold
        lr, rr = rows[mask], rows[~mask]
        li, ri = new_node(lr, depth[nd] + 1), new_node(rr, depth[nd] + 1)
        before = node_loss[nd] * rows.size
        after = node_loss[li] * lr.size + node_loss[ri] * rr.size
        assert after < before, "accepted split must lower the training cost"
        feature[nd], threshold[nd], left[nd], right[nd] = sp.feature, sp.threshold, li, ri
        stack += [(ri, rr), (li, lr)]
    arr = lambda a, t: np.array(a, dtype=t)
    return IntervalTree(arr(feature, np.int64), arr(threshold, float), arr(left, np.int64),
                        arr(right, np.int64), arr(value, float), arr(node_loss, float),
                        arr(n_samples, np.int64), arr(depth, np.int64), max_depth, min_sample)


def train_mmit(train: Dataset, max_depth=math.inf, min_sample: int = 0,
               loss: HingeLossSpec = SQUARED_HINGE) -> IntervalTree:
    record_access(train)
    return grow_tree(train.features, train.lower, train.upper, loss, max_depth, min_sample)


def mmit_grid(depths=MMIT_DEPTHS, min_samples=MMIT_MIN_SAMPLES) -> list[tuple[float, int]]:
    # simplest first: shallow trees, then large minimum split sizes
    return [(d, s) for d in sorted(depths) for s in sorted(min_samples, reverse=True)]


def mmit_cv_select(train: Dataset, seed, loss: HingeLossSpec = SQUARED_HINGE, depths=MMIT_DEPTHS,
                   min_samples=MMIT_MIN_SAMPLES) -> tuple[IntervalTree, dict]:
    """5-fold CV over (max_depth, min_sample).

    One unrestricted tree is grown per fold; a tree grown with a depth or
    minimum-split restriction is exactly its truncation, so every grid cell
    is scored by truncating.  Ties keep the simplest cell.
    """
    record_access(train)
    grid = mmit_grid(depths, min_samples)
    cap = max(depths)
    errors = np.zeros(len(grid))
    for tr, te in cv_splits(train, seed):
        full = train_mmit(tr, cap, 0, loss)
        for gi, (d, s) in enumerate(grid):
            pred = full.truncated(d, s).predict(te.features)
            errors[gi] += hinge_loss_array(pred, te.lower, te.upper, SQUARED_HINGE).mean()
    errors /= 5
    best = int(np.argmin(errors))
    d, s = grid[best]
    model = train_mmit(train, cap, 0, loss).truncated(d, s)
    return model, {"max_depth": d, "min_sample": s, "cv_error": float(errors[best])}
