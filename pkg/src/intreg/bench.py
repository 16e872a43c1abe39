"""5-fold benchmark protocol, aggregation and performance/consistency ranks."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import knn_cv_select, train_constant
from .boosting import gbm_cv_select
from .data import Dataset, make_folds, trace_access
from .forest import train_mmif
from .linear import fit_linear_path_cv
from .losses import mean_squared_hinge_error
from .mlp import mlp_cv_select, mlp_grid
from .tree import mmit_cv_select

log = logging.getLogger(__name__)

MODEL_NAMES = ("constant", "linear", "mmit", "mmif", "knn", "mlp", "aft")
SCHEMA = "intreg.foldreport/1"
N_FOLDS = 5

# --fast profile
FAST_MLP_GRID = dict(num_layers=(1,), hidden_sizes=(10,), activations=("relu", "sigmoid"))
FAST_AFT_CELLS = 4
FAST_AFT_ROUNDS = 30


@dataclass(frozen=True)
class BenchConfig:
    fast: bool = False
    exhaustive_aft: bool = False
    clamp_left_censored: float | None = None
    n_trees: int = 100
    aft_cells: int = 200
    aft_rounds: int = 100

    @property
    def per_tree_cv(self) -> bool:
        return not self.fast


def derive_seed(master: int, *keys) -> int:
    words = [int(master) % 2**32] + [zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def fit_model(name: str, train: Dataset, seed: int, config: BenchConfig = BenchConfig()):
    """Train one model with its internal CV; returns (regressor, selected hyperparameters)."""
    if name == "constant":
        model = train_constant(train)
        return model, {"value": model.value}
    if name == "linear":
        return fit_linear_path_cv(train, seed=seed)
    if name == "mmit":
        return mmit_cv_select(train, seed)
    if name == "mmif":
        model = train_mmif(train, config.n_trees, seed=seed, per_tree_cv=config.per_tree_cv)
        return model, {"n_trees": config.n_trees, "per_tree_cv": config.per_tree_cv}
    if name == "knn":
        return knn_cv_select(train, seed)
    if name == "mlp":
        grid = mlp_grid(**FAST_MLP_GRID) if config.fast else None
        return mlp_cv_select(train, seed=seed, grid=grid)
    if name == "aft":
        cells = FAST_AFT_CELLS if config.fast else config.aft_cells
        rounds = FAST_AFT_ROUNDS if config.fast else config.aft_rounds
        return gbm_cv_select(train, seed, n_cells=cells, exhaustive=config.exhaustive_aft,
                             n_rounds=rounds, clamp=config.clamp_left_censored)
    raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")


def _plain(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


@dataclass
class FoldReport:
    dataset: str
    model: str
    fold: int
    test_error: float | None
    selected_hyperparams: dict = field(default_factory=dict)
    train_seconds: float = 0.0
    test_rows_touched: int = 0
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def to_json(self, include_timing: bool = False) -> str:
        d = {"schema": SCHEMA, "dataset": self.dataset, "model": self.model, "fold": self.fold,
             "test_error": self.test_error,
             "selected_hyperparams": {k: _plain(v) for k, v in self.selected_hyperparams.items()},
             "test_rows_touched": self.test_rows_touched, "failure": self.failure}
        if include_timing:
            d["train_seconds"] = self.train_seconds
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "FoldReport":
        d = json.loads(line)
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(d["dataset"], d["model"], d["fold"], d["test_error"], d["selected_hyperparams"],
                   d.get("train_seconds", 0.0), d["test_rows_touched"], d["failure"])


def run_cell(ds: Dataset, fold_of: np.ndarray, fold: int, model: str, seed: int,
             config: BenchConfig = BenchConfig()) -> FoldReport:
    train_idx = np.flatnonzero(fold_of != fold)
    test_idx = np.flatnonzero(fold_of == fold)
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    cell_seed = derive_seed(seed, ds.name, model, fold)
    t0 = time.perf_counter()
    try:
        with trace_access() as touched:
            reg, info = fit_model(model, train, cell_seed, config)
        elapsed = time.perf_counter() - t0
        leaked = len(touched & set(test.row_ids.tolist()))
        err = mean_squared_hinge_error(reg.predict(test.features), (test.lower, test.upper))
    except Exception as exc:  # a failed cell must not abort the run
        log.warning("cell %s/%s/fold %d failed: %s", ds.name, model, fold, exc)
        return FoldReport(ds.name, model, fold, None, {}, time.perf_counter() - t0, 0,
                          f"{type(exc).__name__}: {exc}")
    return FoldReport(ds.name, model, fold, float(err), dict(info), elapsed, leaked)


def _run_cell_args(args):
    return run_cell(*args)


def run_benchmark(datasets: Sequence[Dataset], models: Sequence[str] = MODEL_NAMES, seed: int = 1,
                  config: BenchConfig = BenchConfig(), jobs: int = 1) -> list[FoldReport]:
    """Every (dataset, model, fold) cell; folds are fixed per dataset so all
    models see identical splits."""
    for name in models:
        if name not in MODEL_NAMES:
            raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ValueError(f"dataset names must be unique, got {names}")
    cells = []
    for ds in datasets:
        if ds.n < 2 * N_FOLDS:
            raise ValueError(f"dataset {ds.name} has {ds.n} rows; need >= {2 * N_FOLDS}")
        folds = make_folds(ds.n, N_FOLDS, derive_seed(seed, ds.name, "folds"))
        for model in models:
            for f in range(N_FOLDS):
                cells.append((ds, folds.fold_of, f, model, seed, config))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_cell_args, cells))
    else:
        reports = [_run_cell_args(c) for c in cells]
    return reports


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    model: str
    mean: float
    std: float
    perf_rank: int
    cons_rank: int


def _rank(values: dict[str, float]) -> dict[str, int]:
    # NaN (failed cells) rank last; ties fall back to model name order
    key = lambda m: (math.isnan(values[m]), values[m] if not math.isnan(values[m]) else 0.0, m)
    return {m: i + 1 for i, m in enumerate(sorted(values, key=key))}


def aggregate_and_rank(reports: Sequence[FoldReport]) -> list[SummaryRow]:
    cells: dict[tuple[str, str], list] = {}
    for r in reports:
        cells.setdefault((r.dataset, r.model), []).append(r)
    datasets = list(dict.fromkeys(r.dataset for r in reports))
    rows = []
    for ds in datasets:
        models = [m for (d, m) in cells if d == ds]
        means, stds = {}, {}
        for m in models:
            rs = cells[(ds, m)]
            if all(r.ok for r in rs):
                errs = np.array([r.test_error for r in sorted(rs, key=lambda r: r.fold)])
                means[m] = float(errs.mean())
                stds[m] = float(errs.std(ddof=1)) if errs.size > 1 else 0.0
            else:
                means[m] = stds[m] = math.nan
        pr, cr = _rank(means), _rank(stds)
        rows += [SummaryRow(ds, m, means[m], stds[m], pr[m], cr[m]) for m in models]
    return rows


def log_fold_errors(reports: Sequence[FoldReport], floor: float = 1e-12) -> list[FoldReport]:
    """Copy of the reports with errors replaced by log10(max(error, floor))."""
    out = []
    for r in reports:
        err = None if r.test_error is None else math.log10(max(r.test_error, floor))
        out.append(FoldReport(r.dataset, r.model, r.fold, err, r.selected_hyperparams,
                              r.train_seconds, r.test_rows_touched, r.failure))
    return out


# ---------------------------------------------------------------------------
# files

def write_reports(reports: Sequence[FoldReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def read_reports(path) -> list[FoldReport]:
    with open(path, encoding="utf-8") as fh:
        return [FoldReport.from_json(line) for line in fh if line.strip()]


def write_timings(reports: Sequence[FoldReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "model", "fold", "train_seconds"])
        for r in reports:
            w.writerow([r.dataset, r.model, r.fold, f"{r.train_seconds:.3f}"])


def _num(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


def render_report(reports: Sequence[FoldReport], out_dir, log_scale: bool = False) -> dict[str, Path]:
    """Write summary.csv, the two wide rank tables and plot_data.csv.

    Ranks always come from raw errors; ``log_scale`` only changes the
    plotted mean/std, which are then taken over log10 errors.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = aggregate_and_rank(reports)
    paths = {}
    paths["summary"] = out / "summary.csv"
    with open(paths["summary"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "model", "mean", "std", "perf_rank", "cons_rank"])
        for r in rows:
            w.writerow([r.dataset, r.model, _num(r.mean), _num(r.std), r.perf_rank, r.cons_rank])
    models = list(dict.fromkeys(r.model for r in rows))
    datasets = list(dict.fromkeys(r.dataset for r in rows))
    lookup = {(r.dataset, r.model): r for r in rows}
    for kind, attr in (("performance_ranks", "perf_rank"), ("consistency_ranks", "cons_rank")):
        paths[kind] = out / f"{kind}.csv"
        with open(paths[kind], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset"] + models)
            for ds in datasets:
                w.writerow([ds] + [getattr(lookup[(ds, m)], attr) if (ds, m) in lookup else "" for m in models])
    plot_rows = aggregate_and_rank(log_fold_errors(reports)) if log_scale else rows
    paths["plot_data"] = out / "plot_data.csv"
    with open(paths["plot_data"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "model", "scale", "mean", "std", "low", "high"])
        for r in plot_rows:
            w.writerow([r.dataset, r.model, "log10" if log_scale else "raw", _num(r.mean), _num(r.std),
                        _num(r.mean - r.std), _num(r.mean + r.std)])
    return paths


def failed_cells(reports: Sequence[FoldReport]) -> list[FoldReport]:
    return [r for r in reports if not r.ok]
