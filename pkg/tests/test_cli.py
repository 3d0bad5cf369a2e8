import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import two_blobs

from cohirf.cli import BENCH_COLUMNS, draw_trials, main, search_space
from cohirf.io import write_dataset_csv


def read_report(out):
    return json.loads((out / "report.json").read_text())


def read_rows(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def test_fit_synthetic(tmp_path):
    out = tmp_path / "fit"
    rc = main(["fit", "--synthetic", "hypercube", "--n", "500", "--p", "347", "--k", "5", "--delta", "100",
               "--q", "20", "--r", "4", "--c", "3", "--seed", "1", "--out-dir", str(out)])
    assert rc == 0
    rep = read_report(out)
    assert "ari" in rep and "ri" in rep
    assert rep["fit_time_s"] >= 0
    assert rep["config"]["q"] == 20 and rep["config"]["n_repetitions"] == 4
    assert len(rep["labels"]) == 500
    assert sorted(p.name for p in out.iterdir()) == ["hierarchy.dot", "hierarchy.json", "labels.csv", "report.json"]
    lines = (out / "labels.csv").read_text().splitlines()
    assert lines[0] == "sample_id,label" and len(lines) == 501


def test_fit_csv_without_labels(tmp_path, iris_paths):
    csv_path, _ = iris_paths
    out = tmp_path / "iris"
    assert main(["fit", "--csv", str(csv_path), "--q", "2", "--out-dir", str(out)]) == 0
    rep = read_report(out)
    assert "ari" not in rep
    assert rep["dataset"]["p"] == 7  # species column one-hot encoded as features


def test_fit_csv_with_schema(tmp_path, iris_paths):
    csv_path, schema_path = iris_paths
    out = tmp_path / "iris"
    assert main(["fit", "--csv", str(csv_path), "--schema", str(schema_path), "--q", "2",
                 "--out-dir", str(out)]) == 0
    rep = read_report(out)
    assert rep["dataset"]["p"] == 4 and "ari" in rep


def test_fit_same_seed_same_bytes(tmp_path):
    args = ["fit", "--synthetic", "gaussians", "--n", "200", "--p", "60", "--q", "10", "--seed", "3"]
    main(args + ["--out-dir", str(tmp_path / "a")])
    main(args + ["--out-dir", str(tmp_path / "b"), "--jobs", "3"])
    assert (tmp_path / "a" / "labels.csv").read_bytes() == (tmp_path / "b" / "labels.csv").read_bytes()


def test_fit_errors_leave_no_artifacts(tmp_path, capsys):
    out = tmp_path / "bad"
    assert main(["fit", "--csv", str(tmp_path / "missing.csv"), "--out-dir", str(out)]) == 2
    assert not out.exists()
    bad = tmp_path / "ragged.csv"
    bad.write_text("a,b\n1,2\n3\n")
    assert main(["fit", "--csv", str(bad), "--out-dir", str(out)]) == 2
    assert "row 3" in capsys.readouterr().err
    assert not out.exists()
    assert main(["fit", "--synthetic", "hypercube", "--n", "10000", "--p", "10000", "--out-dir", str(out)]) == 2
    assert main(["fit", "--out-dir", str(out)]) == 2
    assert not out.exists()
    with pytest.raises(SystemExit):
        main(["fit", "--synthetic", "hypercube", "--r", "x"])


def test_search_space_box():
    assert search_space(1000) == {"q": (2, 30), "R": (2, 10), "C": (2, 10)}
    assert search_space(10)["q"] == (2, 9)
    trials = draw_trials(300, 1000, seed=0)
    assert len(trials) == 300
    for t in trials:
        assert 2 <= t["q"] <= 30 and 2 <= t["R"] <= 10 and 2 <= t["C"] <= 10
    small = draw_trials(50, 4, seed=0)
    assert all(2 <= t["q"] <= 3 for t in small)
    assert draw_trials(10, 100, seed=5) == draw_trials(10, 100, seed=5)


def blob_csv(tmp_path):
    X, y = two_blobs(0)
    path = tmp_path / "blobs.csv"
    write_dataset_csv(path, X, y)
    return path


def test_search_single_trial(tmp_path):
    out = tmp_path / "s1"
    assert main(["search", "--csv", str(blob_csv(tmp_path)), "--label-column", "label", "--trials", "1",
                 "--out-dir", str(out)]) == 0
    rows = read_rows(out / "trials.csv")
    assert len(rows) == 1
    assert read_report(out)["best_trial"] == 0


def test_search_two_blobs(tmp_path):
    out = tmp_path / "s20"
    assert main(["search", "--csv", str(blob_csv(tmp_path)), "--label-column", "label", "--trials", "20",
                 "--seed", "4", "--out-dir", str(out)]) == 0
    rep = read_report(out)
    assert rep["ari"] == 1.0
    rows = read_rows(out / "trials.csv")
    assert max(float(r["ari"]) for r in rows) == 1.0
    assert float(rows[rep["best_trial"]]["ari"]) == 1.0


def test_search_requires_labels(tmp_path, iris_paths):
    csv_path, _ = iris_paths
    assert main(["search", "--csv", str(csv_path), "--trials", "2", "--out-dir", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x").exists()


def test_bench_scale_rows(tmp_path):
    out = tmp_path / "scale.csv"
    assert main(["bench-scale", "--grid", "100", "347", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 4
    assert list(rows[0]) == list(BENCH_COLUMNS)
    assert all(r["status"] == "ok" and float(r["ari"]) == 1.0 for r in rows)
    # appending keeps one header
    main(["bench-scale", "--grid", "100", "--out", str(out)])
    assert len(read_rows(out)) == 5


def test_bench_scale_accepts_full_grid(tmp_path):
    out = tmp_path / "big.csv"
    assert main(["bench-scale", "--grid", "100", "50000", "--axis", "n", "--fixed", "50000",
                 "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [r["status"] for r in rows] == ["ok", "skipped"]


def test_bench_scale_time_budget(tmp_path):
    out = tmp_path / "budget.csv"
    main(["bench-scale", "--grid", "100", "347", "--axis", "n", "--fixed", "100", "--time-budget", "0",
          "--out", str(out)])
    assert [r["status"] for r in read_rows(out)] == ["ok", "skipped"]


def test_bench_scale_time_monotone(tmp_path):
    out = tmp_path / "mono.csv"
    main(["bench-scale", "--grid", "100", "1202", "--axis", "n", "--fixed", "347", "--out", str(out)])
    rows = read_rows(out)
    assert float(rows[1]["time_s"]) > float(rows[0]["time_s"])


def test_bench_separation_rows(tmp_path):
    out = tmp_path / "sep.csv"
    assert main(["bench-separation", "--deltas", "70", "200", "--n", "200", "--p", "200",
                 "--variants", "cohirf", "cohirf-rbf", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 4
    assert {r["variant"] for r in rows} == {"cohirf", "cohirf-rbf"}


def test_bench_header_mismatch(tmp_path):
    out = tmp_path / "other.csv"
    out.write_text("a,b\n1,2\n")
    assert main(["bench-scale", "--grid", "100", "--axis", "n", "--fixed", "100", "--out", str(out)]) == 2
    assert out.read_text() == "a,b\n1,2\n"


def test_generate_then_fit(tmp_path):
    data = tmp_path / "g.csv"
    assert main(["generate", "--kind", "gaussians", "--n", "100", "--p", "30", "--delta", "150",
                 "--out", str(data)]) == 0
    schema = data.with_suffix(".schema.json")
    before = data.read_bytes()
    out = tmp_path / "fit"
    assert main(["fit", "--csv", str(data), "--schema", str(schema), "--q", "10", "--c", "5",
                 "--out-dir", str(out)]) == 0
    assert read_report(out)["ari"] == pytest.approx(1.0)
    assert data.read_bytes() == before


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cohirf", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "bench-separation" in proc.stdout
