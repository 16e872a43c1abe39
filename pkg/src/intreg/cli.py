"""Command line entry point: ``intreg {synth,run,bench,report}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .data import SynthSpec, generate_synthetic, load_csv, save_csv

DEFAULT_SEED = 1


def default_seed() -> int:
    return int(os.environ.get("INTREG_SEED", DEFAULT_SEED))


def _add_profile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default $INTREG_SEED or {DEFAULT_SEED})")
    p.add_argument("--fast", action="store_true", help="shrunken CV grids for quick runs")
    p.add_argument("--exhaustive-aft", action="store_true", help="search the full AFT grid instead of 200 random cells")
    p.add_argument("--clamp-left-censored", type=float, default=None, metavar="VALUE",
                   help="replace -inf lower bounds by VALUE before AFT training")


def _config(args) -> bench.BenchConfig:
    return bench.BenchConfig(fast=args.fast, exhaustive_aft=args.exhaustive_aft,
                             clamp_left_censored=args.clamp_left_censored)


def _model_list(text: str) -> list[str]:
    models = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in models if m not in bench.MODEL_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown model(s) {bad}; choose from {', '.join(bench.MODEL_NAMES)}")
    return models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intreg", description="Interval regression benchmark toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a simulated dataset as CSV")
    p.add_argument("--kind", choices=("linear", "sin", "abs"), required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("run", help="5-fold evaluation of one model on one dataset")
    p.add_argument("--model", choices=bench.MODEL_NAMES, required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="also write the fold reports as JSON lines")
    _add_profile_flags(p)

    p = sub.add_parser("bench", help="all models on all datasets, then render the report")
    p.add_argument("--data", nargs="*", default=[], help="dataset CSV files")
    p.add_argument("--synth", default="", help="comma list of simulated kinds to generate, e.g. linear,sin,abs")
    p.add_argument("--synth-n", type=int, default=200)
    p.add_argument("--synth-m", type=int, default=20)
    p.add_argument("--models", type=_model_list, default=list(bench.MODEL_NAMES))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--log-scale", action="store_true", help="plot data over log10 errors")
    _add_profile_flags(p)

    p = sub.add_parser("report", help="re-render CSV tables from stored reports")
    p.add_argument("--reports", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log-scale", action="store_true")
    return parser


def cmd_synth(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    ds = generate_synthetic(SynthSpec(args.kind, args.n, args.m, seed))
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows x {ds.m} features to {args.out}")
    return 0


def cmd_run(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    ds = load_csv(args.data)
    reports = bench.run_benchmark([ds], [args.model], seed, _config(args))
    for r in reports:
        if r.ok:
            print(f"fold {r.fold}: {r.test_error:.6g}  {r.selected_hyperparams}")
        else:
            print(f"fold {r.fold}: FAILED {r.failure}")
    row = bench.aggregate_and_rank(reports)[0]
    print(f"mean {row.mean:.6g}  std {row.std:.6g}")
    if args.out:
        bench.write_reports(reports, args.out)
    return _report_failures(reports)


def _report_failures(reports) -> int:
    failed = bench.failed_cells(reports)
    for r in failed:
        print(f"failed cell: {r.dataset}/{r.model}/fold {r.fold}: {r.failure}", file=sys.stderr)
    return 1 if failed else 0


def cmd_bench(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    datasets = [load_csv(p) for p in args.data]
    for kind in [k.strip() for k in args.synth.split(",") if k.strip()]:
        datasets.append(generate_synthetic(SynthSpec(kind, args.synth_n, args.synth_m, seed)))
    if not datasets:
        print("no datasets given (use --data and/or --synth)", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = bench.run_benchmark(datasets, args.models, seed, _config(args), jobs=args.jobs)
    bench.write_reports(reports, out / "reports.jsonl")
    bench.write_timings(reports, out / "timings.csv")
    bench.render_report(reports, out, log_scale=args.log_scale)
    print(f"{len(reports)} fold reports written to {out}")
    return _report_failures(reports)


def cmd_report(args) -> int:
    reports = bench.read_reports(args.reports)
    paths = bench.render_report(reports, args.out, log_scale=args.log_scale)
    for p in paths.values():
        print(p)
    return _report_failures(reports)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(over="ignore")
    return {"synth": cmd_synth, "run": cmd_run, "bench": cmd_bench, "report": cmd_report}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
