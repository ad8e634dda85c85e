import csv
import json

import numpy as np
import pytest

from graphmeasures.bench import EvalRecord, GraphRecord, write_features, write_results
from graphmeasures.cli import main
from graphmeasures.measures import ALL_MEASURES, MeasureId


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen") / "graphs"
    assert main(["generate", "--count", "3", "--seed", "7", "--out", str(out), "--n-range", "10,40"]) == 0
    return out


def test_generate_outputs(generated, tmp_path):
    files = sorted(p.name for p in generated.iterdir())
    assert [f for f in files if f.endswith(".txt")] == ["g00000.txt", "g00001.txt", "g00002.txt"]
    assert "failures.jsonl" in files and "run_config.json" in files
    meta = json.loads((generated / "g00001.json").read_text())
    assert meta["graph_id"] == "g00001" and "realized_mixing" in meta
    again = tmp_path / "again"
    assert main(["generate", "--count", "3", "--seed", "7", "--out", str(again), "--n-range", "10,40"]) == 0
    for name in files:
        if name != "run_config.json":
            assert (generated / name).read_bytes() == (again / name).read_bytes()


def test_env_seed_overrides(generated, tmp_path, monkeypatch):
    monkeypatch.setenv("GM_SEED", "7")
    out = tmp_path / "env"
    assert main(["generate", "--count", "1", "--seed", "999", "--out", str(out), "--n-range", "10,40"]) == 0
    assert (out / "g00000.txt").read_bytes() == (generated / "g00000.txt").read_bytes()
    assert json.loads((out / "run_config.json").read_text())["seed"] == 7
    monkeypatch.setenv("GM_SEED", "abc")
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--count", "1", "--out", str(out)])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["generate", "--count", "0", "--out", "x"],
    ["generate", "--count", "2", "--out", "x", "--n-range", "10"],
    ["bench", "--graphs", "d", "--out", "r.csv", "--measures", "logRSP"],
    ["bench", "--graphs", "d", "--out", "r.csv", "--workers", "0"],
    ["analyze", "--results", "r", "--features", "f", "--mode", "zones", "--sigma", "-1", "--out-dir", "o"],
    ["analyze", "--results", "r", "--features", "f", "--mode", "plots", "--out-dir", "o"],
    [],
])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_bench_filter_and_resume(generated, tmp_path, capsys):
    out = tmp_path / "r.csv"
    argv = ["bench", "--graphs", str(generated), "--measures", "SCCT,RSP", "--out", str(out)]
    assert main(argv) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 6
    assert {r["measure"] for r in rows} == {"SCCT", "RSP"}
    assert (tmp_path / "features.csv").exists()
    first = out.read_bytes()
    capsys.readouterr()
    assert main(argv) == 0
    assert "skipped 6 existing" in capsys.readouterr().out
    assert out.read_bytes() == first


def test_bench_empty_dir(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["bench", "--graphs", str(tmp_path / "empty"), "--out", str(tmp_path / "r.csv")]) == 1


@pytest.fixture
def synthetic_store(tmp_path):
    rng = np.random.default_rng(0)
    recs, ds = [], []
    for i in range(40):
        gid = f"g{i:05d}"
        mod = float(rng.uniform(-0.4, 0.6))
        for m in ALL_MEASURES:
            best = 0.9 if (m == MeasureId("SCCT")) == (mod < 0) else float(rng.uniform(0, 0.8))
            recs.append(EvalRecord(gid, m, best, 0.5, (best,) * 16, "inertia"))
        ds.append(GraphRecord(gid, features={"n": 50, "tau1": float(rng.uniform(1.1, 3)),
                                             "tau2": 2.0, "log_avg_degree": float(rng.uniform(0.7, 3)),
                                             "gt_modularity": mod}))
    write_results(recs, tmp_path / "r.csv")
    write_features(ds, tmp_path / "f.csv")
    return tmp_path


def _analyze(store, mode, *extra):
    return main(["analyze", "--results", str(store / "r.csv"), "--features", str(store / "f.csv"),
                 "--mode", mode, "--out-dir", str(store / "out"), *extra])


def test_analyze_leaderboard(synthetic_store):
    assert _analyze(synthetic_store, "leaderboard") == 0
    out = synthetic_store / "out"
    for subset in ("associative", "dissociative"):
        rows = list(csv.DictReader((out / f"leaderboard_{subset}.csv").open()))
        assert len(rows) == 25
        assert list(rows[0]) == ["measure", "mean_rank", "wins_pct", "mean_ari"]
    top = next(csv.DictReader((out / "leaderboard_dissociative.csv").open()))
    assert top["measure"] == "SCCT"


def test_analyze_lda_and_zones(synthetic_store):
    assert _analyze(synthetic_store, "lda") == 0
    out = synthetic_store / "out"
    assert (out / "lda.csv").exists() and (out / "lda_report.txt").exists()
    assert _analyze(synthetic_store, "zones", "--sigma", "0.6", "--resolution", "6", "--plots") == 0
    rows = list(csv.DictReader((out / "zones.csv").open()))
    assert len(rows) == 216
    assert list(rows[0]) == ["tau1", "avg_degree", "modularity", "winner", "support"]
    assert all((r["winner"] == "none") == (int(r["support"]) < 3) for r in rows)
    assert len(list(out.glob("slices_*.png"))) == 3


def test_analyze_schema_mismatch(synthetic_store):
    (synthetic_store / "r.csv").write_text("a,b\n1,2\n")
    assert _analyze(synthetic_store, "leaderboard") == 1
