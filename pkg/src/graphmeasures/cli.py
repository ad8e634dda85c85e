"""Command-line entry point: ``graphmeasures generate | bench | analyze``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analysis
from .bench import load_dataset, read_features, read_results, run_benchmark
from .graph import write_graph
from .lfr import GenerationFailed, generate_lfr_record, sample_lfr_config
from .measures import ALL_MEASURES, DEFAULT_SIGMOID_SIGN, InvalidMeasure, MeasureId

log = logging.getLogger("graphmeasures")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
MAX_CANDIDATES_PER_GRAPH = 50
LDA_FEATURES = ("n", "tau1", "tau2", "log_avg_degree", "gt_modularity")
DIAGNOSTIC_SIGMAS = (0.3, 0.45, 0.6, 0.8, 1.0)


class CommandFailed(RuntimeError):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _n_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    if not 2 <= lo < hi - 1:
        raise argparse.ArgumentTypeError(f"need 2 <= LO < HI - 1, got {text!r}")
    return lo, hi


def _measures(text: str) -> list[MeasureId]:
    if text == "all":
        return list(ALL_MEASURES)
    try:
        return [MeasureId.parse(name.strip()) for name in text.split(",") if name.strip()]
    except InvalidMeasure as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(args) -> int:
    return args.env_seed if args.env_seed is not None else args.seed


def _write_config(out_dir: Path, command: str, args, **resolved) -> None:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "env_seed", "verbose")}
    cfg = json.loads(json.dumps(cfg, default=str)) | resolved | {"command": command}
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- generate -------------------------------------------------------------------

def cmd_generate(args) -> int:
    seed = _seed(args)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CommandFailed(f"cannot create {out}: {exc}") from exc
    _write_config(out, "generate", args, seed=seed)
    accepted = 0
    failures = []
    limit = args.count * MAX_CANDIDATES_PER_GRAPH
    candidate = 0
    while accepted < args.count and candidate < limit:
        config = sample_lfr_config(tuple(args.n_range), seed=[seed, candidate])
        try:
            rec = generate_lfr_record(config)
        except GenerationFailed as exc:
            failures.append({"candidate": candidate, "params": asdict(config.params),
                             "seed": config.seed, "error": str(exc)})
            candidate += 1
            continue
        gid = f"g{accepted:05d}"
        write_graph(rec.graph, out / f"{gid}.txt")
        meta = rec.metadata() | {"graph_id": gid, "candidate": candidate}
        with open(out / f"{gid}.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        log.info("%s n=%d m=%d k=%d mu=%.3f", gid, rec.graph.n, rec.graph.m, rec.graph.k,
                 rec.realized_mixing)
        accepted += 1
        candidate += 1
    with open(out / "failures.jsonl", "w") as fh:
        for f in failures:
            fh.write(json.dumps(f, sort_keys=True, default=float) + "\n")
    print(f"generated {accepted} graphs ({len(failures)} rejected candidates) in {out}")
    if accepted == 0:
        raise CommandFailed("no graph was accepted")
    if accepted < args.count:
        raise CommandFailed(f"only {accepted} of {args.count} graphs accepted after {limit} candidates")
    return EXIT_OK


# --- bench ----------------------------------------------------------------------

def cmd_bench(args) -> int:
    seed = _seed(args)
    dataset = load_dataset(args.graphs)
    if not dataset:
        raise CommandFailed(f"no graph files in {args.graphs}")
    results = Path(args.out)
    features = Path(args.features) if args.features else results.with_name("features.csv")
    _write_config(results.parent, "bench", args, seed=seed, features=str(features))
    wanted = {(rec.graph_id, m) for rec in dataset for m in args.measures}
    skipped = 0
    if results.exists():
        try:
            skipped = len(wanted & {(r.graph_id, r.measure) for r in read_results(results)})
        except ValueError as exc:
            raise CommandFailed(str(exc)) from exc
    errors: list = []
    records = run_benchmark(dataset, args.measures, criterion=args.criterion,
                            workers=args.workers, results_path=results,
                            features_path=features, base_seed=seed,
                            sigmoid_sign=args.sct_sign, errors=errors)
    print(f"skipped {skipped} existing; wrote {len(records)} records to {results}")
    if errors:
        raise CommandFailed(f"{len(errors)} records failed; see log")
    return EXIT_OK


# --- analyze --------------------------------------------------------------------

def _leaderboards(records, features, out: Path) -> list:
    for subset in ("associative", "dissociative", "all"):
        rows = analysis.leaderboard(records, features, subset)
        analysis.write_leaderboard(rows, out / f"leaderboard_{subset}.csv")
        print(f"{subset}: {len(analysis.subset_ids(features, subset))} graphs")
        for i, r in enumerate(rows[:5], start=1):
            print(f"  {i}. {r.measure!s:<10} rank {r.mean_rank:6.2f}  wins {r.wins_pct:5.1f}%"
                  f"  ari {r.mean_ari:.3f}")
    return analysis.leaderboard(records, features, "all")


def _lda(records, features, out: Path) -> None:
    gids, measures, table = analysis.ari_table(records, features.keys())
    priority = [str(r.measure) for r in analysis.leaderboard(records, features, "all")]
    y = np.asarray(analysis.winner_labels(table, [str(m) for m in measures], priority))
    X = np.array([[features[g][f] for f in LDA_FEATURES] for g in gids])
    ok = np.all(np.isfinite(X), axis=1)
    labels, counts = np.unique(y[ok], return_counts=True)
    keep = ok & np.isin(y, labels[counts >= 2])
    dropped = sorted(set(labels[counts < 2]))
    if dropped:
        log.warning("dropping winner classes with one sample: %s", ", ".join(dropped))
    try:
        res = analysis.lda_importance(X[keep], y[keep], LDA_FEATURES)
    except analysis.DegenerateClasses as exc:
        raise CommandFailed(f"LDA impossible: {exc}") from exc
    analysis.write_lda(res, out / "lda.csv", out / "lda_report.txt")
    print((out / "lda_report.txt").read_text(), end="")


def _zones(records, features, out: Path, args) -> None:
    X, table, labels = analysis.zone_inputs(records, features)
    priority = [str(r.measure) for r in analysis.leaderboard(records, features, "all")]
    cfg = analysis.FilterConfig(args.sigma)
    lmap = analysis.leadership_map(X, table, labels, args.resolution, cfg, priority)
    analysis.write_zones(lmap, out / "zones.csv")
    analysis.write_zone_summary(lmap, out / "zones_summary.csv")
    diag = analysis.sigma_diagnostics(X, table, labels, DIAGNOSTIC_SIGMAS, args.resolution, priority)
    analysis.write_sigma_diagnostics(diag, out / "sigma_diagnostics.csv")
    for lab, count in lmap.win_counts.items():
        print(f"  {lab:<10} {count:5d} cells  {lmap.components[lab]} components")
    if args.plots:
        for p in analysis.plot_slices(lmap, out):
            print(f"  wrote {p}")


def cmd_analyze(args) -> int:
    out = Path(args.out_dir)
    try:
        records = read_results(args.results)
        features = read_features(args.features)
    except (OSError, ValueError, KeyError) as exc:
        raise CommandFailed(f"cannot read inputs: {exc}") from exc
    missing = sorted({r.graph_id for r in records} - set(features))
    if missing:
        raise CommandFailed(f"results mention graphs absent from features: {', '.join(missing[:5])}")
    _write_config(out, "analyze", args)
    try:
        if args.mode == "leaderboard":
            _leaderboards(records, features, out)
        elif args.mode == "lda":
            _lda(records, features, out)
        else:
            _zones(records, features, out, args)
    except (analysis.MissingMeasure, analysis.EmptyDataset) as exc:
        raise CommandFailed(str(exc)) from exc
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphmeasures",
                                description="Benchmark graph closeness measures for community detection.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample LFR graphs")
    g.add_argument("--count", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, default=0, help="global seed (GM_SEED overrides)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--n-range", type=_n_range, default=(10, 300), metavar="LO,HI",
                   help="node count drawn from the open range (LO, HI); default 10,300")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="evaluate measures on a graph directory")
    b.add_argument("--graphs", required=True)
    b.add_argument("--measures", type=_measures, default=list(ALL_MEASURES),
                   help="'all' or comma-separated names such as SCCT,RSP,logFor")
    b.add_argument("--criterion", choices=("inertia", "modularity"), default="inertia")
    b.add_argument("--workers", type=_positive_int, default=1)
    b.add_argument("--out", required=True, help="results CSV")
    b.add_argument("--features", help="features CSV (default: features.csv beside --out)")
    b.add_argument("--seed", type=int, default=0, help="base seed for k-means trials (GM_SEED overrides)")
    b.add_argument("--sct-sign", type=int, choices=(1, -1), default=DEFAULT_SIGMOID_SIGN,
                   help="sign inside the sigmoid of SCT/SCCT (default %(default)s)")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("analyze", help="leaderboards, LDA or leadership zones")
    a.add_argument("--results", required=True)
    a.add_argument("--features", required=True)
    a.add_argument("--mode", choices=("leaderboard", "lda", "zones"), required=True)
    a.add_argument("--sigma", type=_positive_float, default=0.6)
    a.add_argument("--resolution", type=_positive_int, default=20)
    a.add_argument("--out-dir", required=True)
    a.add_argument("--plots", action="store_true", help="also write slice images (needs matplotlib)")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env = os.environ.get("GM_SEED", "").strip()
    args.env_seed = None
    if env:
        try:
            args.env_seed = int(env)
        except ValueError:
            parser.error(f"GM_SEED must be an integer, got {env!r}")
    if (args.env_seed if args.env_seed is not None else getattr(args, "seed", 0)) < 0:
        parser.error("seed must be nonnegative")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CommandFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
