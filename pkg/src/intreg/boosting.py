"""Newton-boosted regression trees on the AFT negative log-likelihood.

Targets are moved to the positive half-line with exp(); the model's score is
the log-space location, so it is the prediction in original units without
any further transform.  Left-censored targets become (0, exp(upper)), which
lets the score run off toward -inf; ``clamp_left_censored`` replaces the
-inf lower bounds by a finite value before training.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .base import Regressor, cv_splits
from .baselines import leaf_value
from .data import Dataset, record_access
from .losses import (AftLossSpec, Distribution, IntervalTarget, aft_grad_hess_array, aft_loss_array,
                     hinge_loss_array, SQUARED_HINGE)

EXP_LIMIT = 700.0

GRID = {
    "learning_rate": (0.001, 0.01, 0.1, 1.0),
    "max_depth": tuple(range(2, 11)),
    "min_child_weight": (0.001, 0.1, 1.0, 10.0, 100.0),
    "reg_alpha": (0.001, 0.01, 0.1, 1.0, 10.0, 100.0),
    "reg_lambda": (0.001, 0.01, 0.1, 1.0, 10.0, 100.0),
    "sigma": (0.5, 0.8, 1.1, 1.4, 1.7, 2.0),
}
DISTRIBUTIONS = tuple(d.value for d in Distribution)


@dataclass(frozen=True)
class BoostConfig:
    learning_rate: float = 0.1
    max_depth: int = 6
    min_child_weight: float = 1.0
    reg_alpha: float = 0.0
    reg_lambda: float = 1.0
    sigma: float = 1.0
    distribution: str = "normal"
    n_rounds: int = 100
    clamp_left_censored: float | None = None

    @property
    def aft(self) -> AftLossSpec:
        return AftLossSpec(Distribution(self.distribution), self.sigma)

    def as_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "max_depth": self.max_depth,
                "min_child_weight": self.min_child_weight, "reg_alpha": self.reg_alpha,
                "reg_lambda": self.reg_lambda, "aft_loss_distribution_scale": self.sigma,
                "distribution": self.distribution, "n_rounds": self.n_rounds}


def transform_targets_exp(targets) -> list[IntervalTarget] | tuple[np.ndarray, np.ndarray]:
    """exp() both bounds: exp(-inf) = 0, exp(+inf) = +inf.

    Accepts a sequence of IntervalTarget or a (lower, upper) array pair and
    returns the same kind.
    """
    as_pair = isinstance(targets, tuple) and len(targets) == 2 and isinstance(targets[0], np.ndarray)
    if as_pair:
        lower, upper = targets
    else:
        lower = np.array([t.lower for t in targets], dtype=float)
        upper = np.array([t.upper for t in targets], dtype=float)
    for b in (lower, upper):
        fin = b[np.isfinite(b)]
        if fin.size and fin.max() > EXP_LIMIT:
            raise OverflowError(f"bound {fin.max()} overflows exp(); rescale the targets")
    lo, hi = np.exp(lower), np.exp(upper)
    if as_pair:
        return lo, hi
    return [IntervalTarget(a, b) for a, b in zip(lo, hi)]


def clamp_left(lower, upper, value: float) -> np.ndarray:
    """Replace -inf lower bounds by ``value`` (never above the upper bound)."""
    lower = np.asarray(lower, dtype=float)
    return np.where(np.isneginf(lower), np.minimum(value, upper), lower)


def soft_threshold(g, alpha):
    return np.sign(g) * np.maximum(np.abs(g) - alpha, 0.0)


def leaf_weight(G, H, alpha, lam):
    return -soft_threshold(G, alpha) / (H + lam)


def _score(G, H, alpha, lam):
    t = soft_threshold(G, alpha)
    return t * t / (H + lam)


def split_gain(G_left, H_left, G_right, H_right, alpha, lam):
    return 0.5 * (_score(G_left, H_left, alpha, lam) + _score(G_right, H_right, alpha, lam)
                  - _score(G_left + G_right, H_left + H_right, alpha, lam))


@dataclass(frozen=True, eq=False)
class NewtonTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.left[node[idx]] >= 0
        return self.value[node]


def grow_newton_tree(X, g, h, max_depth, min_child_weight, alpha, lam, sorted_idx=None) -> NewtonTree:
    """Exact greedy tree on second-order gain (pre-sorted columns)."""
    n, m = X.shape
    if sorted_idx is None:
        sorted_idx = np.argsort(X, axis=0, kind="stable").T
    feature, threshold, left, right, value = [], [], [], [], []

    def add(rows):
        feature.append(-1), threshold.append(np.nan), left.append(-1), right.append(-1)
        value.append(float(leaf_weight(g[rows].sum(), h[rows].sum(), alpha, lam)))
        return len(value) - 1

    member = np.zeros(n, dtype=bool)
    stack = [(add(np.arange(n)), np.arange(n), 0)]
    while stack:
        nd, rows, depth = stack.pop()
        if depth >= max_depth or rows.size < 2:
            continue
        member[:] = False
        member[rows] = True
        G, H = g[rows].sum(), h[rows].sum()
        best = (0.0, -1, 0.0)
        for j in range(m):
            order = sorted_idx[j][member[sorted_idx[j]]]
            xs = X[order, j]
            GL = np.cumsum(g[order])[:-1]
            HL = np.cumsum(h[order])[:-1]
            ok = (xs[:-1] < xs[1:]) & (HL >= min_child_weight) & (H - HL >= min_child_weight)
            if not ok.any():
                continue
            gain = np.where(ok, split_gain(GL, HL, G - GL, H - HL, alpha, lam), -np.inf)
            k = int(np.argmax(gain))
            if gain[k] > best[0] + 1e-12:
                best = (float(gain[k]), j, 0.5 * (xs[k] + xs[k + 1]))
        gain, j, thr = best
        if j < 0:
            continue
        mask = X[rows, j] <= thr
        li, ri = add(rows[mask]), add(rows[~mask])
        feature[nd], threshold[nd], left[nd], right[nd] = j, thr, li, ri
        stack += [(ri, rows[~mask], depth + 1), (li, rows[mask], depth + 1)]
    return NewtonTree(np.array(feature, dtype=np.int64), np.array(threshold),
                      np.array(left, dtype=np.int64), np.array(right, dtype=np.int64), np.array(value))


@dataclass(frozen=True, eq=False)
class AftBoostModel(Regressor):
    base_score: float
    trees: tuple[NewtonTree, ...]
    config: BoostConfig
    train_nll: tuple[float, ...] = ()

    def _predict(self, X):
        out = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            out += self.config.learning_rate * t.predict(X)
        return out


def train_gbm_aft(train: Dataset, config: BoostConfig = BoostConfig()) -> AftBoostModel:
    record_access(train)
    lower, upper = train.lower, train.upper
    if config.clamp_left_censored is not None:
        lower = clamp_left(lower, upper, config.clamp_left_censored)
    exp_lo, exp_hi = transform_targets_exp((lower, upper))
    spec = config.aft
    # starting point: best constant of the log-space intervals
    base = leaf_value(lower, upper, SQUARED_HINGE)[0]
    X = train.features
    sorted_idx = np.argsort(X, axis=0, kind="stable").T
    pred = np.full(train.n, base)
    trees = []
    nll = [float(aft_loss_array(pred, exp_lo, exp_hi, spec).sum())]
    for _ in range(config.n_rounds):
        g, h = aft_grad_hess_array(pred, exp_lo, exp_hi, spec)
        tree = grow_newton_tree(X, g, h, config.max_depth, config.min_child_weight,
                                config.reg_alpha, config.reg_lambda, sorted_idx)
        trees.append(tree)
        pred = pred + config.learning_rate * tree.predict(X)
        nll.append(float(aft_loss_array(pred, exp_lo, exp_hi, spec).sum()))
    return AftBoostModel(base, tuple(trees), config, tuple(nll))


def exhaustive_grid(distribution: str = "normal", n_rounds: int = 100, clamp=None) -> list[BoostConfig]:
    keys = list(GRID)
    return [BoostConfig(**dict(zip(keys, vals)), distribution=distribution, n_rounds=n_rounds,
                        clamp_left_censored=clamp)
            for vals in itertools.product(*(GRID[k] for k in keys))]


def sample_grid(n_cells: int, seed, distributions=DISTRIBUTIONS, n_rounds: int = 100, clamp=None) -> list[BoostConfig]:
    """``n_cells`` distinct configurations drawn uniformly from grid x distributions."""
    sizes = [len(GRID[k]) for k in GRID] + [len(distributions)]
    total = math.prod(sizes)
    rng = np.random.default_rng(seed)
    flat = rng.choice(total, size=min(n_cells, total), replace=False)
    cells = []
    for code in flat:
        idx = np.unravel_index(int(code), sizes)
        vals = {k: GRID[k][i] for k, i in zip(GRID, idx[:-1])}
        cells.append(BoostConfig(**vals, distribution=distributions[idx[-1]], n_rounds=n_rounds,
                                 clamp_left_censored=clamp))
    return cells


def gbm_cv_select(train: Dataset, seed=0, n_cells: int = 200, exhaustive: bool = False,
                  distributions=DISTRIBUTIONS, n_rounds: int = 100, clamp=None,
                  cells: list[BoostConfig] | None = None) -> tuple[AftBoostModel, dict]:
    """5-fold CV on mean squared hinge error; ties keep the earlier cell."""
    record_access(train)
    if cells is None:
        if exhaustive:
            cells = [c for d in distributions for c in exhaustive_grid(d, n_rounds, clamp)]
        else:
            cells = sample_grid(n_cells, seed, distributions, n_rounds, clamp)
    errors = np.zeros(len(cells))
    for tr, te in cv_splits(train, seed):
        for ci, cfg in enumerate(cells):
            pred = train_gbm_aft(tr, cfg).predict(te.features)
            errors[ci] += hinge_loss_array(pred, te.lower, te.upper, SQUARED_HINGE).mean()
    errors /= 5
    errors = np.where(np.isnan(errors), np.inf, errors)
    best = int(np.argmin(errors))
    cfg = cells[best]
    info = dict(cfg.as_dict(), cv_error=float(errors[best]), cv_median=float(np.median(errors)),
                n_cells=len(cells))
    return train_gbm_aft(train, cfg), info
