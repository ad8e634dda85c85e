"""Score every measure on every graph: 16 grid values, 18 k-means trials each, best ARI kept."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import STRATEGIES, TRIALS_PER_STRATEGY, cluster_best_trial
from .graph import DerivedMatrices, Graph, derive_matrices, read_graph
from .lfr import LFRParams
from .measures import ALL_MEASURES, DEFAULT_SIGMOID_SIGN, MeasureError, MeasureId, build_measure
from .scoring import ari, modularity

log = logging.getLogger(__name__)

GRID_SIZE = 16
GRID = tuple(i / (GRID_SIZE - 1) for i in range(GRID_SIZE))
N_TRIALS = TRIALS_PER_STRATEGY * len(STRATEGIES)

RESULT_FIELDS = (["graph_id", "measure", "variant", "best_x", "best_ari"]
                 + [f"ari_{i}" for i in range(GRID_SIZE)] + ["failures", "criterion"])
FEATURE_FIELDS = ["graph_id", "n", "tau1", "tau2", "log_avg_degree", "gt_modularity"]


@dataclass
class GraphRecord:
    graph_id: str
    path: str | None = None
    params: LFRParams | None = None
    features: dict = field(default_factory=dict)
    graph: Graph | None = field(default=None, repr=False)

    def load(self) -> Graph:
        if self.graph is None:
            self.graph = read_graph(self.path)
        return self.graph


@dataclass
class EvalRecord:
    graph_id: str
    measure: MeasureId
    best_ari: float
    best_x: float
    per_x_ari: tuple[float, ...]
    criterion: str
    failures: int = 0

    @property
    def key(self) -> tuple[str, int]:
        return (self.graph_id, ALL_MEASURES.index(self.measure))

    def to_row(self) -> list[str]:
        return ([self.graph_id, self.measure.family, self.measure.variant,
                 repr(float(self.best_x)), repr(float(self.best_ari))]
                + [repr(float(a)) for a in self.per_x_ari] + [str(self.failures), self.criterion])

    @classmethod
    def from_row(cls, row: dict) -> EvalRecord:
        return cls(
            graph_id=row["graph_id"],
            measure=MeasureId(row["measure"], row["variant"]),
            best_ari=float(row["best_ari"]),
            best_x=float(row["best_x"]),
            per_x_ari=tuple(float(row[f"ari_{i}"]) for i in range(GRID_SIZE)),
            criterion=row["criterion"],
            failures=int(row["failures"]),
        )


def task_seed(graph_id: str, measure: MeasureId, grid_index: int, trial_index: int,
              base_seed: int = 0) -> int:
    """64-bit seed that depends only on the task coordinates, not on scheduling."""
    key = f"{base_seed}|{graph_id}|{measure.name}|{grid_index}|{trial_index}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def compute_features(graph: Graph, params: LFRParams | None = None) -> dict:
    """Full feature vector plus the reduced triple used by the leadership filter."""
    mean_degree = 2 * graph.m / graph.n
    gt_mod = modularity(graph, graph.communities)
    nan = float("nan")
    return {
        "n": graph.n,
        "tau1": params.tau1 if params else nan,
        "tau2": params.tau2 if params else nan,
        "log_avg_degree": math.log(mean_degree),
        "gt_modularity": gt_mod,
        "reduced": (params.tau1 if params else nan, mean_degree, gt_mod),
    }


def evaluate_measure(graph: Graph, measure: MeasureId | str, criterion: str = "inertia",
                     graph_id: str = "g", matrices: DerivedMatrices | None = None,
                     base_seed: int = 0, sigmoid_sign: int = DEFAULT_SIGMOID_SIGN,
                     grid=GRID) -> EvalRecord:
    if isinstance(measure, str):
        measure = MeasureId.parse(measure)
    if matrices is None:
        matrices = derive_matrices(graph)
    y_true = graph.labels
    scores = []
    failures = 0
    for gi, x in enumerate(grid):
        try:
            K = build_measure(measure, x, matrices, sigmoid_sign=sigmoid_sign).values
        except (MeasureError, np.linalg.LinAlgError) as exc:
            log.debug("%s %s x=%.3f failed: %s", graph_id, measure, x, exc)
            failures += 1
            scores.append(0.0)
            continue
        seeds = [task_seed(graph_id, measure, gi, t, base_seed) for t in range(N_TRIALS)]
        best = cluster_best_trial(K, graph.k, graph, criterion=criterion, seeds=seeds)
        scores.append(ari(y_true, best.labels))
    i = int(np.argmax(scores))
    return EvalRecord(graph_id, measure, float(scores[i]), float(grid[i]),
                      tuple(float(s) for s in scores), criterion, failures)


# --- result stores -------------------------------------------------------------

def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_results(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in sorted(records, key=lambda r: r.key):
        w.writerow(r.to_row())
    return buf.getvalue()


def write_results(records, path) -> None:
    _atomic_write(path, format_results(records))


def read_results(path) -> list[EvalRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_FIELDS:
            raise ValueError(f"{path}: unexpected results header")
        return [EvalRecord.from_row(row) for row in reader]


def write_features(dataset: list[GraphRecord], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FEATURE_FIELDS)
    for rec in sorted(dataset, key=lambda r: r.graph_id):
        f = rec.features
        w.writerow([rec.graph_id, str(f["n"])] + [repr(float(f[k])) for k in FEATURE_FIELDS[2:]])
    _atomic_write(path, buf.getvalue())


def read_features(path) -> dict[str, dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FEATURE_FIELDS:
            raise ValueError(f"{path}: unexpected features header")
        out = {}
        for row in reader:
            out[row["graph_id"]] = {"n": int(row["n"])} | {
                k: float(row[k]) for k in FEATURE_FIELDS[2:]}
        return out


def load_dataset(graphs_dir) -> list[GraphRecord]:
    """Graph files ``<id>.txt`` with optional ``<id>.json`` sidecar metadata."""
    out = []
    for path in sorted(Path(graphs_dir).glob("*.txt")):
        params = None
        meta = path.with_suffix(".json")
        if meta.exists():
            with open(meta) as fh:
                params = LFRParams(**json.load(fh)["params"])
        out.append(GraphRecord(path.stem, str(path), params))
    return out


# --- work queue ---------------------------------------------------------------

_worker_cache: dict = {}


def _run_task(task):
    rec, measure, criterion, base_seed, sign = task
    try:
        cached = _worker_cache.get("graph")
        if cached is None or cached[0] != rec.graph_id:
            graph = rec.load()
            _worker_cache["graph"] = (rec.graph_id, graph, derive_matrices(graph))
        _, graph, matrices = _worker_cache["graph"]
        return evaluate_measure(graph, measure, criterion, rec.graph_id, matrices,
                                base_seed=base_seed, sigmoid_sign=sign)
    except (OSError, ValueError) as exc:
        return (rec.graph_id, measure, f"{type(exc).__name__}: {exc}")


def run_benchmark(dataset: list[GraphRecord], measures=ALL_MEASURES, criterion: str = "inertia",
                  workers: int = 1, results_path=None, features_path=None,
                  base_seed: int = 0, sigmoid_sign: int = DEFAULT_SIGMOID_SIGN,
                  errors: list | None = None, progress=None) -> list[EvalRecord]:
    """Evaluate every (graph, measure) pair; resumable through ``results_path``.

    Records already present in the results store are kept and not recomputed.
    The store is rewritten atomically, sorted, after each graph's batch.
    """
    if not dataset:
        raise ValueError("empty dataset")
    measures = sorted({MeasureId.parse(m) if isinstance(m, str) else m for m in measures},
                      key=ALL_MEASURES.index)
    dataset = sorted(dataset, key=lambda r: r.graph_id)
    done: dict = {}
    if results_path is not None and Path(results_path).exists():
        done = {r.key: r for r in read_results(results_path)}
    wanted_ids = {rec.graph_id for rec in dataset}

    if features_path is not None:
        for rec in dataset:
            if not rec.features:
                try:
                    rec.features = compute_features(rec.load(), rec.params)
                except (OSError, ValueError) as exc:
                    _report(errors, rec.graph_id, None, f"{type(exc).__name__}: {exc}")
        write_features([r for r in dataset if r.features], features_path)

    tasks = [(rec, m, criterion, base_seed, sigmoid_sign)
             for rec in dataset for m in measures
             if (rec.graph_id, ALL_MEASURES.index(m)) not in done]
    skipped = len(dataset) * len(measures) - len(tasks)
    if skipped:
        log.info("skipped %d existing records", skipped)
    for rec in dataset:
        if rec.path:
            rec.graph = None  # ship paths, not parsed graphs, to workers

    def collect(results):
        pending = []
        for i, res in enumerate(results, start=1):
            if isinstance(res, EvalRecord):
                done[res.key] = res
                pending.append(res)
            else:
                _report(errors, *res)
            if progress is not None:
                progress(i, len(tasks))
            if results_path is not None and (i % len(measures) == 0 or i == len(tasks)):
                write_results(done.values(), results_path)
                pending.clear()

    if workers <= 1 or len(tasks) <= 1:
        collect(map(_run_task, tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            collect(pool.map(_run_task, tasks, chunksize=max(1, len(measures))))
    if results_path is not None and not tasks:
        write_results(done.values(), results_path)
    mset = set(measures)
    return sorted((r for r in done.values() if r.graph_id in wanted_ids and r.measure in mset),
                  key=lambda r: r.key)


def _report(errors, graph_id, measure, message):
    log.error("%s %s: %s", graph_id, measure, message)
    if errors is not None:
        errors.append((graph_id, str(measure) if measure else None, message))
