import math
from pathlib import Path

import numpy as np
import pytest

from graphmeasures import bench
from graphmeasures.bench import (
    GRID, EvalRecord, GraphRecord, compute_features, evaluate_measure, format_results,
    read_features, read_results, run_benchmark, task_seed, write_features, write_results,
)
from graphmeasures.graph import Graph, write_graph
from graphmeasures.measures import ALL_MEASURES, MeasureError, MeasureId

from conftest import two_cliques


def test_grid():
    assert len(GRID) == 16 and GRID[0] == 0.0 and GRID[-1] == 1.0
    assert GRID[5] == pytest.approx(1 / 3)


def test_task_seed_stable():
    m = MeasureId("SCCT")
    s = task_seed("g00001", m, 3, 7, base_seed=1)
    assert s == task_seed("g00001", m, 3, 7, base_seed=1)
    assert s != task_seed("g00001", m, 3, 8, base_seed=1)
    assert 0 <= s < 2**64


@pytest.mark.parametrize("criterion", ["inertia", "modularity"])
def test_forest_on_two_cliques(criterion):
    rec = evaluate_measure(two_cliques(), "For", criterion)
    assert rec.best_ari == 1.0
    assert rec.best_ari == max(rec.per_x_ari)
    assert len(rec.per_x_ari) == 16 and 0 <= rec.best_x <= 1


def test_all_failures_and_ties(monkeypatch):
    def boom(*a, **k):
        raise MeasureError("nope")
    monkeypatch.setattr(bench, "build_measure", boom)
    rec = evaluate_measure(two_cliques(), "Katz")
    assert rec.best_ari == 0.0 and rec.best_x == 0.0 and rec.failures == 16


def test_grid_refinement_monotone():
    g = two_cliques(3)
    coarse = evaluate_measure(g, "Heat", grid=GRID[::3])
    fine = evaluate_measure(g, "Heat", grid=tuple(sorted(set(GRID[::3]) | set(GRID[1::3]))))
    assert fine.best_ari >= coarse.best_ari


def test_features():
    k3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert compute_features(k3)["gt_modularity"] == 0.0
    f = compute_features(two_cliques())
    assert f["log_avg_degree"] == pytest.approx(math.log(2 * 13 / 8))
    assert f["reduced"][1] == pytest.approx(2 * 13 / 8)


def test_results_roundtrip(tmp_path):
    recs = [EvalRecord("g1", MeasureId("HPR", "log"), 0.5, 0.2, tuple(np.linspace(0, 0.5, 16)),
                       "inertia", 2),
            EvalRecord("g0", MeasureId("SP-CT"), 1 / 3, 1.0, tuple([1 / 3] * 16), "inertia")]
    write_results(recs, tmp_path / "r.csv")
    back = read_results(tmp_path / "r.csv")
    assert [r.graph_id for r in back] == ["g0", "g1"]
    assert back[1] == recs[0]
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header == ("graph_id,measure,variant,best_x,best_ari,"
                      + ",".join(f"ari_{i}" for i in range(16)) + ",failures,criterion")


def _dataset(tmp_path):
    ds = []
    for i, size in enumerate((3, 4)):
        p = tmp_path / f"g{i}.txt"
        write_graph(two_cliques(size), p)
        ds.append(GraphRecord(f"g{i}", str(p)))
    return ds


def test_run_benchmark_resumable_and_parallel(tmp_path, caplog):
    ds = _dataset(tmp_path)
    measures = ALL_MEASURES
    out = tmp_path / "r.csv"
    recs = run_benchmark(ds, measures, results_path=out, features_path=tmp_path / "f.csv")
    assert len(recs) == 50
    text = out.read_text()
    caplog.set_level("INFO")
    again = run_benchmark(_dataset(tmp_path), measures, results_path=out)
    assert "skipped 50 existing" in caplog.text
    assert out.read_text() == text and again == recs
    par = run_benchmark(_dataset(tmp_path), measures, workers=3, results_path=tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text() == text
    assert par == recs
    feats = read_features(tmp_path / "f.csv")
    assert set(feats) == {"g0", "g1"} and math.isnan(feats["g0"]["tau1"])


def test_io_error_reported_not_fatal(tmp_path):
    ds = _dataset(tmp_path) + [GraphRecord("zz", str(tmp_path / "missing.txt"))]
    errors = []
    recs = run_benchmark(ds, [MeasureId("For")], errors=errors)
    assert len(recs) == 2 and len(errors) == 1 and errors[0][0] == "zz"


def test_empty_dataset():
    with pytest.raises(ValueError):
        run_benchmark([], ALL_MEASURES)
