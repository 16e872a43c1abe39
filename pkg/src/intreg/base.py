from __future__ import annotations

import numpy as np

from .data import Dataset, make_folds
from .losses import mean_squared_hinge_error


class Regressor:
    """Shared predict() shape handling: a 1-d row gives a float, a matrix gives an array."""

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(self._predict(X[None, :])[0])
        return self._predict(X)


def cv_splits(ds: Dataset, seed, k: int = 5):
    """Inner k-fold splits of ``ds`` as (train, test) Dataset pairs."""
    folds = make_folds(ds.n, k, seed)
    return [(ds.subset(tr), ds.subset(te)) for tr, te in folds.splits()]


def test_error(model: Regressor, ds: Dataset) -> float:
    return mean_squared_hinge_error(model.predict(ds.features), (ds.lower, ds.upper))


test_error.__test__ = False  # not a pytest test
