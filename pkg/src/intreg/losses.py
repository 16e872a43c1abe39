"""Interval targets, hinge and AFT losses, and the evaluation metric."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

AFT_LIKELIHOOD_FLOOR = 1e-15
AFT_HESSIAN_FLOOR = 1e-6


class CensoringKind(enum.Enum):
    UNCENSORED = "uncensored"
    RIGHT = "right-censored"
    LEFT = "left-censored"
    INTERVAL = "interval-censored"
    # (-inf, +inf): every prediction is acceptable
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class IntervalTarget:
    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval bounds must not be NaN")
        if lo > hi:
            raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
        if lo == hi and math.isinf(lo):
            raise ValueError(f"degenerate infinite interval ({lo}, {hi})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def censoring_kind(self) -> CensoringKind:
        lo_fin, hi_fin = math.isfinite(self.lower), math.isfinite(self.upper)
        if lo_fin and hi_fin:
            return CensoringKind.UNCENSORED if self.lower == self.upper else CensoringKind.INTERVAL
        if lo_fin:
            return CensoringKind.RIGHT
        if hi_fin:
            return CensoringKind.LEFT
        return CensoringKind.UNBOUNDED


@dataclass(frozen=True)
class HingeLossSpec:
    p: int = 2
    epsilon: float = 0.0

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError(f"hinge exponent must be 1 or 2, got {self.p}")
        if not self.epsilon >= 0:
            raise ValueError(f"margin must be nonnegative, got {self.epsilon}")


SQUARED_HINGE = HingeLossSpec(2, 0.0)


class Distribution(str, enum.Enum):
    NORMAL = "normal"
    LOGISTIC = "logistic"
    EXTREME = "extreme"


@dataclass(frozen=True)
class AftLossSpec:
    distribution: Distribution = Distribution.NORMAL
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        if not self.sigma > 0:
            raise ValueError(f"AFT scale must be positive, got {self.sigma}")


def bounds_of(targets: Sequence[IntervalTarget]) -> tuple[np.ndarray, np.ndarray]:
    lower = np.array([t.lower for t in targets], dtype=float)
    upper = np.array([t.upper for t in targets], dtype=float)
    return lower, upper


# ---------------------------------------------------------------------------
# hinge loss

def _violations(pred, lower, upper, eps):
    pred = np.asarray(pred, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    # infinite bounds are never violated; branch instead of relying on inf arithmetic
    below = np.where(np.isfinite(lower), np.maximum(lower - pred + eps, 0.0), 0.0)
    above = np.where(np.isfinite(upper), np.maximum(pred - upper + eps, 0.0), 0.0)
    return below, above


def hinge_loss_array(pred, lower, upper, spec: HingeLossSpec = SQUARED_HINGE) -> np.ndarray:
    """Elementwise hinge loss; broadcasts over predictions and bounds."""
    below, above = _violations(pred, lower, upper, spec.epsilon)
    if spec.p == 1:
        return below + above
    return below * below + above * above


def hinge_subgrad_array(pred, lower, upper, spec: HingeLossSpec = SQUARED_HINGE) -> np.ndarray:
    """Derivative of :func:`hinge_loss_array` w.r.t. the prediction.

    At the p=1 kinks the violation is exactly zero, which selects the zero
    subgradient.
    """
    below, above = _violations(pred, lower, upper, spec.epsilon)
    if spec.p == 1:
        return (above > 0).astype(float) - (below > 0).astype(float)
    return 2.0 * (above - below)


def hinge_loss(y_hat: float, target: IntervalTarget, spec: HingeLossSpec = SQUARED_HINGE) -> float:
    return float(hinge_loss_array(y_hat, target.lower, target.upper, spec))


def hinge_subgrad(y_hat: float, target: IntervalTarget, spec: HingeLossSpec = SQUARED_HINGE) -> float:
    return float(hinge_subgrad_array(y_hat, target.lower, target.upper, spec))


def mean_squared_hinge_error(predictions, targets) -> float:
    """Mean of the p=2, eps=0 hinge loss.

    ``targets`` is either a sequence of :class:`IntervalTarget` or a
    ``(lower, upper)`` pair of arrays.
    """
    if isinstance(targets, tuple) and len(targets) == 2 and isinstance(targets[0], np.ndarray):
        lower, upper = targets
    else:
        lower, upper = bounds_of(list(targets))
    predictions = np.asarray(predictions, dtype=float).ravel()
    if predictions.size == 0:
        raise ValueError("mean squared hinge error of an empty batch")
    if predictions.shape != lower.shape:
        raise ValueError(f"{predictions.size} predictions for {lower.size} targets")
    return float(np.mean(hinge_loss_array(predictions, lower, upper, SQUARED_HINGE)))


# ---------------------------------------------------------------------------
# AFT negative log-likelihood

def _pdf_cdf(z, dist: Distribution):
    """Return (f, F, S, dlogf) with S = 1 - F and dlogf = f'/f."""
    if dist is Distribution.NORMAL:
        f = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return f, special.ndtr(z), special.ndtr(-z), -z
    if dist is Distribution.LOGISTIC:
        F = special.expit(z)
        S = special.expit(-z)
        return F * S, F, S, S - F
    zc = np.clip(z, -700.0, 700.0)
    ez = np.exp(zc)
    S = np.exp(-ez)
    return ez * S, -np.expm1(-ez), S, 1.0 - ez


def _dlogf_slope(z, dist: Distribution):
    """d/dz of f'/f, used by the uncensored Hessian."""
    if dist is Distribution.NORMAL:
        return -np.ones_like(z)
    if dist is Distribution.LOGISTIC:
        F = special.expit(z)
        return -2.0 * F * (1.0 - F)
    return -np.exp(np.clip(z, -700.0, 700.0))


def _log_bounds(lower, upper):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower < 0) or np.any(upper <= 0):
        raise ValueError("AFT targets need nonnegative lower and positive upper bounds")
    with np.errstate(divide="ignore"):
        return np.log(lower), np.log(upper)


def _aft_terms(pred, lower, upper, spec: AftLossSpec):
    pred = np.asarray(pred, dtype=float)
    log_l, log_u = _log_bounds(lower, upper)
    pred, log_l, log_u = np.broadcast_arrays(pred, log_l, log_u)
    s = spec.sigma
    dist = spec.distribution
    exact = log_l == log_u
    with np.errstate(invalid="ignore"):
        z_u = (log_u - pred) / s
        z_l = np.where(exact, z_u, (log_l - pred) / s)
    f_u, F_u, S_u, dl_u = _pdf_cdf(z_u, dist)
    f_l, F_l, S_l, dl_l = _pdf_cdf(z_l, dist)
    # infinite bounds: f = f' = 0, F(-inf) = 0, F(+inf) = 1
    inf_u = np.isinf(z_u)
    inf_l = np.isinf(z_l)
    f_u = np.where(inf_u, 0.0, f_u)
    f_l = np.where(inf_l, 0.0, f_l)
    dl_u = np.where(inf_u, 0.0, dl_u)
    dl_l = np.where(inf_l, 0.0, dl_l)
    # subtract survival functions in the upper tail to keep precision
    mass = np.where(z_l > 0, S_l - S_u, F_u - F_l)
    return exact, z_u, f_u, f_l, dl_u, dl_l, mass, log_u


def aft_loss_array(pred, lower, upper, spec: AftLossSpec) -> np.ndarray:
    """AFT negative log-likelihood of log-space predictions.

    ``lower``/``upper`` are the exp-transformed (nonnegative) bounds; a
    lower bound of exactly 0 is a left-censored observation.
    """
    exact, z_u, f_u, _, _, _, mass, log_u = _aft_terms(pred, lower, upper, spec)
    with np.errstate(over="ignore", invalid="ignore"):
        density = f_u / (spec.sigma * np.exp(log_u))
    lik = np.where(exact, density, mass)
    return -np.log(np.maximum(lik, AFT_LIKELIHOOD_FLOOR))


def aft_grad_hess_array(pred, lower, upper, spec: AftLossSpec) -> tuple[np.ndarray, np.ndarray]:
    exact, z_u, f_u, f_l, dl_u, dl_l, mass, _ = _aft_terms(pred, lower, upper, spec)
    s = spec.sigma
    dist = spec.distribution
    # uncensored: l = -log f(z) + const, dz/dpred = -1/s
    g_exact = dl_u / s
    h_exact = -_dlogf_slope(np.where(np.isfinite(z_u), z_u, 0.0), dist) / (s * s)
    # censored: l = -log(F(z_u) - F(z_l))
    D = np.maximum(mass, AFT_LIKELIHOOD_FLOOR)
    N = f_u - f_l
    dN = f_u * dl_u - f_l * dl_l
    g_cens = N / (s * D)
    h_cens = (N * N - dN * D) / (s * s * D * D)
    grad = np.where(exact, g_exact, g_cens)
    hess = np.maximum(np.where(exact, h_exact, h_cens), AFT_HESSIAN_FLOOR)
    return grad, hess


def aft_loss(y_hat: float, target: IntervalTarget, spec: AftLossSpec) -> float:
    return float(aft_loss_array(y_hat, target.lower, target.upper, spec))


def aft_grad_hess(y_hat: float, target: IntervalTarget, spec: AftLossSpec) -> tuple[float, float]:
    g, h = aft_grad_hess_array(y_hat, target.lower, target.upper, spec)
    return float(g), float(h)
