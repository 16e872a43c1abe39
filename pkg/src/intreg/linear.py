"""L1-regularized max-margin interval regression fit by FISTA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Regressor, cv_splits
from .data import Dataset, Standardizer, record_access
from .losses import SQUARED_HINGE, HingeLossSpec, hinge_loss_array, hinge_subgrad_array

LAMBDA_START = 0.001
LAMBDA_FACTOR = 1.2
MAX_PATH_STEPS = 500


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@dataclass(frozen=True, eq=False)
class LinearModel(Regressor):
    """``predict(x) = x @ coef + intercept`` in raw feature units."""

    coef: np.ndarray
    intercept: float
    lam: float
    converged: bool = True
    n_iter: int = 0

    def _predict(self, X):
        return X @ self.coef + self.intercept


@dataclass
class FistaResult:
    beta: np.ndarray
    intercept: float
    objective: float
    n_iter: int
    converged: bool
    lipschitz: float
    history: list


def _smooth(Z, lower, upper, loss, beta, b0):
    pred = Z @ beta + b0
    n = Z.shape[0]
    val = hinge_loss_array(pred, lower, upper, loss).sum() / n
    g = hinge_subgrad_array(pred, lower, upper, loss) / n
    return val, Z.T @ g, g.sum()


def _smooth_value(Z, lower, upper, loss, beta, b0):
    return hinge_loss_array(Z @ beta + b0, lower, upper, loss).sum() / Z.shape[0]


def fista(Z, lower, upper, lam, loss: HingeLossSpec = SQUARED_HINGE, beta=None, intercept=0.0,
          lipschitz=1.0, tol=1e-8, max_iter=10_000) -> FistaResult:
    """Minimize mean hinge loss + lam * ||beta||_1 over (beta, intercept).

    Backtracking doubles the Lipschitz estimate until the quadratic upper
    bound holds.  When an accelerated step would raise the objective the
    momentum is reset and the step is retaken from the current iterate.
    """
    m = Z.shape[1]
    x_b = np.zeros(m) if beta is None else np.array(beta, dtype=float)
    x_0 = float(intercept)
    L = float(lipschitz)
    F_x = _smooth_value(Z, lower, upper, loss, x_b, x_0) + lam * np.abs(x_b).sum()
    y_b, y_0 = x_b.copy(), x_0
    t = 1.0
    history = [F_x]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        f_y, g_b, g_0 = _smooth(Z, lower, upper, loss, y_b, y_0)
        while True:
            z_b = soft_threshold(y_b - g_b / L, lam / L)
            z_0 = y_0 - g_0 / L
            f_z = _smooth_value(Z, lower, upper, loss, z_b, z_0)
            d_b, d_0 = z_b - y_b, z_0 - y_0
            bound = f_y + g_b @ d_b + g_0 * d_0 + 0.5 * L * (d_b @ d_b + d_0 * d_0)
            if f_z <= bound + 1e-12 * max(1.0, abs(f_y)):
                break
            L *= 2.0
        F_z = f_z + lam * np.abs(z_b).sum()
        if F_z > F_x and t > 1.0:
            # monotone restart
            t = 1.0
            y_b, y_0 = x_b.copy(), x_0
            continue
        if F_z > F_x:
            # plain prox step from x cannot ascend beyond rounding; keep x
            z_b, z_0, F_z = x_b, x_0, F_x
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_next
        y_b = z_b + mom * (z_b - x_b)
        y_0 = z_0 + mom * (z_0 - x_0)
        change = abs(F_x - F_z)
        x_b, x_0, t = z_b, z_0, t_next
        prev, F_x = F_x, F_z
        history.append(F_x)
        if F_x == 0.0 or change <= tol * max(abs(prev), 1e-300):
            converged = True
            break
    return FistaResult(x_b, x_0, F_x, it, converged, L, history)


def _to_raw(res: FistaResult, scaler: Standardizer, lam: float) -> LinearModel:
    safe = np.where(scaler.std > 0, scaler.std, 1.0)
    coef = np.where(scaler.std > 0, res.beta / safe, 0.0)
    intercept = res.intercept - float(coef @ scaler.mean)
    return LinearModel(coef, intercept, lam, res.converged, res.n_iter)


def fit_linear_at_lambda(train: Dataset, lam: float, loss: HingeLossSpec = SQUARED_HINGE,
                         init: LinearModel | None = None) -> LinearModel:
    """Fit at a single L1 weight; features are standardized internally."""
    record_access(train)
    scaler = Standardizer.fit(train.features)
    Z = scaler.transform(train.features)
    beta, b0 = None, 0.0
    if init is not None:
        beta = init.coef * scaler.std
        b0 = init.intercept + float(init.coef @ scaler.mean)
    res = fista(Z, train.lower, train.upper, lam, loss, beta, b0)
    return _to_raw(res, scaler, lam)


def lambda_path(n_steps: int) -> np.ndarray:
    return LAMBDA_START * LAMBDA_FACTOR ** np.arange(n_steps)


def _fit_path(Z, lower, upper, loss, lams=None):
    """Warm-started path.  Without ``lams`` it runs until every coefficient is zero."""
    fits = []
    beta, b0, L = None, 0.0, 1.0
    j = 0
    while True:
        if lams is not None and j >= len(lams):
            break
        lam = LAMBDA_START * LAMBDA_FACTOR ** j if lams is None else lams[j]
        if fits and not np.any(fits[-1].beta):
            # beta stays at zero for every larger lambda
            fits.append(fits[-1])
        else:
            res = fista(Z, lower, upper, lam, loss, beta, b0, L)
            fits.append(res)
            beta, b0, L = res.beta, res.intercept, res.lipschitz
        j += 1
        if lams is None and (not np.any(fits[-1].beta) or j >= MAX_PATH_STEPS):
            break
    return fits


def fit_linear_path_cv(train: Dataset, loss: HingeLossSpec = SQUARED_HINGE, seed=0) -> tuple[LinearModel, dict]:
    """Pick lambda on the path by 5-fold CV.

    The path is extended until beta = 0 on the full data and in every fold,
    so the featureless fit is always among the candidates.  Shorter paths
    are padded with their zero fit, which stays optimal for larger lambda.
    """
    if train.n < 5:
        raise ValueError(f"linear path CV needs at least 5 rows, got {train.n}")
    record_access(train)
    scaler = Standardizer.fit(train.features)
    full = _fit_path(scaler.transform(train.features), train.lower, train.upper, loss)
    folds = []
    for tr, te in cv_splits(train, seed):
        record_access(tr)
        sc = Standardizer.fit(tr.features)
        folds.append((te, sc.transform(te.features), _fit_path(sc.transform(tr.features), tr.lower, tr.upper, loss)))
    n_steps = max([len(full)] + [len(f[2]) for f in folds])
    full = full + [full[-1]] * (n_steps - len(full))
    lams = lambda_path(n_steps)
    cv_err = np.zeros(n_steps)
    for te, Zte, path in folds:
        path = path + [path[-1]] * (n_steps - len(path))
        for j, res in enumerate(path):
            pred = Zte @ res.beta + res.intercept
            cv_err[j] += hinge_loss_array(pred, te.lower, te.upper, SQUARED_HINGE).mean()
    cv_err /= len(folds)
    # ties resolve toward the larger lambda
    best = n_steps - 1 - int(np.argmin(cv_err[::-1]))
    model = _to_raw(full[best], scaler, float(lams[best]))
    info = {"lambda": float(lams[best]), "cv_error": float(cv_err[best]),
            "n_nonzero": int(np.count_nonzero(model.coef)), "path_length": n_steps}
    return model, info
