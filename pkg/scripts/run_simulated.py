"""Simulated-data comparison: all models on linear / sin / abs over several seeds.

    python scripts/run_simulated.py --out results/simulated --seeds 1 2 3 4 5 --fast
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from intreg.bench import MODEL_NAMES, BenchConfig, aggregate_and_rank, render_report, run_benchmark, write_reports
from intreg.data import SynthSpec, generate_synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/simulated")
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--models", nargs="+", default=list(MODEL_NAMES))
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--m", type=int, default=20)
    ap.add_argument("--fast", action="store_true")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)

    cfg = BenchConfig(fast=args.fast)
    wins = {}
    for seed in args.seeds:
        datasets = [generate_synthetic(SynthSpec(k, args.n, args.m, seed)) for k in ("linear", "sin", "abs")]
        reports = run_benchmark(datasets, args.models, seed, cfg, jobs=args.jobs)
        out = Path(args.out) / f"seed{seed}"
        out.mkdir(parents=True, exist_ok=True)
        write_reports(reports, out / "reports.jsonl")
        render_report(reports, out, log_scale=True)
        for row in aggregate_and_rank(reports):
            if row.perf_rank == 1:
                wins.setdefault(row.dataset, []).append(row.model)
        for row in aggregate_and_rank(reports):
            print(f"seed {seed} {row.dataset:18s} {row.model:9s} {row.mean:10.4f} +- {row.std:.4f}  rank {row.perf_rank}")
    print()
    for ds, models in wins.items():
        names, counts = np.unique(models, return_counts=True)
        print(ds, "best model per seed:", dict(zip(names.tolist(), counts.tolist())))


if __name__ == "__main__":
    main()
