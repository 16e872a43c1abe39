"""Datasets, CSV ingestion, normalization, fold splitting and simulated data."""

from __future__ import annotations

import contextlib
import contextvars
import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Literal, Sequence

import numpy as np

from .losses import IntervalTarget

TARGET_COLUMNS = ("y_low", "y_high")


class DataFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# row-access instrumentation (used by the benchmark's leakage check)

_recorders: contextvars.ContextVar[tuple[set, ...]] = contextvars.ContextVar("_recorders", default=())


@contextlib.contextmanager
def trace_access() -> Iterator[set]:
    """Collect the row ids of every dataset handed to a trainer inside the block."""
    touched: set = set()
    token = _recorders.set(_recorders.get() + (touched,))
    try:
        yield touched
    finally:
        _recorders.reset(token)


def record_access(ds: "Dataset") -> None:
    recorders = _recorders.get()
    if recorders:
        ids = ds.row_ids.tolist()
        for rec in recorders:
            rec.update(ids)


# ---------------------------------------------------------------------------

def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    features: np.ndarray
    feature_names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    row_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        X = _frozen(self.features)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataFormatError(f"feature matrix must be n x m with n, m >= 1, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataFormatError("features must be finite")
        lo, hi = _frozen(self.lower), _frozen(self.upper)
        if lo.shape != (X.shape[0],) or hi.shape != (X.shape[0],):
            raise DataFormatError("one target interval per row is required")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise DataFormatError("target bounds must not be NaN")
        bad = np.flatnonzero((lo > hi) | ((lo == hi) & np.isinf(lo)))
        if bad.size:
            i = bad[0]
            raise DataFormatError(f"row {i}: invalid interval ({lo[i]}, {hi[i]})")
        names = tuple(self.feature_names)
        if len(names) != X.shape[1]:
            raise DataFormatError(f"{len(names)} feature names for {X.shape[1]} columns")
        ids = np.arange(X.shape[0]) if self.row_ids is None else np.array(self.row_ids, dtype=np.int64)
        ids.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def targets(self) -> list[IntervalTarget]:
        return [IntervalTarget(lo, hi) for lo, hi in zip(self.lower, self.upper)]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.name, self.features[idx], self.feature_names,
                       self.lower[idx], self.upper[idx], self.row_ids[idx])

    def with_features(self, X: np.ndarray) -> "Dataset":
        return Dataset(self.name, X, self.feature_names, self.lower, self.upper, self.row_ids)

    def select_columns(self, cols) -> "Dataset":
        cols = np.asarray(cols, dtype=np.int64)
        return Dataset(self.name, self.features[:, cols], tuple(self.feature_names[c] for c in cols),
                       self.lower, self.upper, self.row_ids)

    def with_targets(self, lower, upper) -> "Dataset":
        return Dataset(self.name, self.features, self.feature_names, lower, upper, self.row_ids)

    def equals(self, other: "Dataset") -> bool:
        return (self.name == other.name and self.feature_names == other.feature_names
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))


# ---------------------------------------------------------------------------
# CSV format

def _parse_bound(cell: str, empty: float) -> float:
    s = cell.strip()
    if s == "":
        return empty
    low = s.lower()
    if low in ("inf", "+inf"):
        return math.inf
    if low == "-inf":
        return -math.inf
    v = float(s)
    if math.isnan(v):
        raise ValueError("NaN bound")
    return v


def load_csv(source, name: str | None = None) -> Dataset:
    """Read a dataset: feature columns followed by ``y_low,y_high``.

    ``source`` is a path, a text stream or a byte stream.  Empty ``y_low``
    means -inf, empty ``y_high`` means +inf.
    """
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        with open(path, newline="", encoding="utf-8") as fh:
            return load_csv(fh, name or path.stem)
    if isinstance(source, (io.BufferedIOBase, io.RawIOBase)):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty CSV input") from None
    header = [h.strip() for h in header]
    if len(header) < 3 or tuple(header[-2:]) != TARGET_COLUMNS:
        raise DataFormatError(f"header must end with {','.join(TARGET_COLUMNS)} after >= 1 feature column")
    m = len(header) - 2
    rows, lows, highs = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            feats = [float(c) for c in row[:m]]
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: unparseable feature cell ({exc})") from None
        if not all(math.isfinite(v) for v in feats):
            raise DataFormatError(f"line {lineno}: non-finite feature value")
        try:
            lo = _parse_bound(row[m], -math.inf)
            hi = _parse_bound(row[m + 1], math.inf)
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: unparseable target cell ({exc})") from None
        if lo > hi:
            raise DataFormatError(f"line {lineno}: y_low {lo} > y_high {hi}")
        if lo == hi and math.isinf(lo):
            raise DataFormatError(f"line {lineno}: both bounds are {lo}")
        rows.append(feats)
        lows.append(lo)
        highs.append(hi)
    if not rows:
        raise DataFormatError("CSV contains no data rows")
    return Dataset(name or "dataset", np.array(rows), tuple(header[:m]), np.array(lows), np.array(highs))


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def save_csv(ds: Dataset, dest) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            save_csv(ds, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(list(ds.feature_names) + list(TARGET_COLUMNS))
    for x, lo, hi in zip(ds.features, ds.lower, ds.upper):
        writer.writerow([_fmt(v) for v in x] + [_fmt(lo), _fmt(hi)])


# ---------------------------------------------------------------------------
# normalization

@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        return cls(X.mean(axis=0), X.std(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        centered = X - self.mean
        # zero-variance columns carry no information: map them to 0
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, centered / safe, 0.0)


def normalize_train_test(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, Standardizer]:
    if train.m != test.m:
        raise DataFormatError(f"column mismatch: {train.m} vs {test.m}")
    record_access(train)
    st = Standardizer.fit(train.features)
    return train.with_features(st.transform(train.features)), test.with_features(st.transform(test.features)), st


# ---------------------------------------------------------------------------
# folds

@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def splits(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for f in range(self.k):
            yield self.train_indices(f), self.test_indices(f)


def make_folds(n: int, k: int = 5, seed=0) -> FoldAssignment:
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % k
    fold_of.setflags(write=False)
    return FoldAssignment(fold_of, k)


# ---------------------------------------------------------------------------
# simulated datasets

SynthKind = Literal["linear", "sin", "abs"]
_LATENT = {"linear": lambda x: x, "sin": np.sin, "abs": np.abs}
CENSOR_FRACTION = 0.2


@dataclass(frozen=True)
class SynthSpec:
    kind: str = "linear"
    n_instances: int = 200
    n_features: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _LATENT:
            raise ValueError(f"unknown simulated kind {self.kind!r}; choose from {sorted(_LATENT)}")
        if self.n_features < 1 or self.n_instances < 1:
            raise ValueError("need at least one instance and one feature")


def signal_column(spec: SynthSpec) -> int:
    """Index of the informative feature in ``generate_synthetic(spec)``."""
    return int(np.random.default_rng(spec.seed).integers(spec.n_features))


def generate_synthetic(spec: SynthSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n_instances, spec.n_features
    signal = int(rng.integers(m))
    X = rng.uniform(-10.0, 10.0, size=(n, m))
    latent = _LATENT[spec.kind](X[:, signal])
    half_width = 0.1 + np.abs(rng.normal(0.0, 0.3, size=n))
    lower = latent - half_width
    upper = latent + half_width
    shift = rng.normal(0.0, np.abs(lower) / 10.0)
    lower = lower + shift
    upper = upper + shift
    n_cens = int(round(CENSOR_FRACTION * n))
    order = rng.permutation(n)
    upper[order[:n_cens]] = np.inf
    lower[order[n_cens:2 * n_cens]] = -np.inf
    names = tuple(f"x{j}" for j in range(m))
    return Dataset(f"simulated.{spec.kind}", X, names, lower, upper)
