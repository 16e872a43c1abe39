"""Constructed datasets and fixed configurations for the reproduction runs."""

from __future__ import annotations

import numpy as np

from .boosting import BoostConfig
from .data import Dataset

# a grid cell where the left-censored rows pull the score below any
# observed bound.  reg_lambda stays at 0.1: with 0.001 the Newton steps
# overshoot even on clamped (fully finite) targets, which is a different
# instability from the one being reproduced.
PATHOLOGY = BoostConfig(learning_rate=1.0, max_depth=3, min_child_weight=0.001, reg_alpha=0.001,
                        reg_lambda=0.1, sigma=1.0, distribution="logistic", n_rounds=100)
CLAMP_VALUE = -5.0


def left_censored_problem(n: int = 200, seed: int = 0) -> Dataset:
    """Half the rows (x0 > 0) are left-censored at an upper bound in [-2, -1];
    the rest are width-1 intervals around U(-2, 2)."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (n, 3))
    cens = X[:, 0] > 0
    mid = rng.uniform(-2.0, 2.0, n)
    lower = np.where(cens, -np.inf, mid - 0.5)
    upper = np.where(cens, rng.uniform(-2.0, -1.0, n), mid + 0.5)
    return Dataset("constructed.left_censored", X, ("x0", "x1", "x2"), lower, upper)
