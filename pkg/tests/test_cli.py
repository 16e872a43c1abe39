import csv
import subprocess
import sys

import numpy as np
import pytest

from intreg import bench
from intreg.cli import main


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_synth_row_count_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["synth", "--kind", "sin", "--n", "200", "--m", "20", "--seed", "1", "-o", str(a)]) == 0
    assert main(["synth", "--kind", "sin", "--n", "200", "--m", "20", "--seed", "1", "-o", str(b)]) == 0
    assert len(a.read_text().splitlines()) == 201
    assert a.read_bytes() == b.read_bytes()


def test_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("INTREG_SEED", "7")
    main(["synth", "--kind", "abs", "--n", "20", "--m", "2", "-o", str(tmp_path / "env.csv")])
    main(["synth", "--kind", "abs", "--n", "20", "--m", "2", "--seed", "7", "-o", str(tmp_path / "flag.csv")])
    assert (tmp_path / "env.csv").read_bytes() == (tmp_path / "flag.csv").read_bytes()


def test_run_constant(tmp_path, capsys):
    data = tmp_path / "lin.csv"
    main(["synth", "--kind", "linear", "--n", "60", "--m", "4", "--seed", "1", "-o", str(data)])
    out = tmp_path / "r.jsonl"
    assert main(["run", "--model", "constant", "--data", str(data), "--out", str(out)]) == 0
    errs = [r.test_error for r in bench.read_reports(out)]
    assert len(errs) == 5 and np.all(np.isfinite(errs))


def test_forest_beats_linear_on_abs(tmp_path):
    data = tmp_path / "sim_abs.csv"
    main(["synth", "--kind", "abs", "--n", "200", "--m", "20", "--seed", "1", "-o", str(data)])
    means = {}
    for model in ("mmif", "linear"):
        out = tmp_path / f"{model}.jsonl"
        assert main(["run", "--model", model, "--data", str(data), "--seed", "1", "--fast", "--out", str(out)]) == 0
        means[model] = np.mean([r.test_error for r in bench.read_reports(out)])
    assert means["mmif"] < means["linear"]


def test_invalid_model_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--model", "ridge", "--data", str(tmp_path / "x.csv")])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--synth", "abs", "--models", "constant,ridge", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_bench_and_report(tmp_path):
    out = tmp_path / "bench"
    args = ["bench", "--synth", "linear,sin,abs", "--synth-n", "25", "--synth-m", "2", "--fast", "--out", str(out)]
    assert main(args) == 0
    summary = _rows(out / "summary.csv")
    assert len(summary) == 21
    for row in _rows(out / "performance_ranks.csv"):
        assert sorted(int(v) for k, v in row.items() if k != "dataset") == list(range(1, 8))
    again = tmp_path / "again"
    assert main(["report", "--reports", str(out / "reports.jsonl"), "--out", str(again)]) == 0
    for name in ("summary.csv", "performance_ranks.csv", "consistency_ranks.csv", "plot_data.csv"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_failed_cells_exit_nonzero(tmp_path, capsys):
    good = bench.FoldReport("d", "constant", 0, 1.0)
    bad = bench.FoldReport("d", "knn", 0, None, failure="RuntimeError: boom")
    bench.write_reports([good, bad], tmp_path / "r.jsonl")
    assert main(["report", "--reports", str(tmp_path / "r.jsonl"), "--out", str(tmp_path / "o")]) == 1
    assert "d/knn/fold 0" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "intreg", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "synth" in proc.stdout
