"""Leaderboards, LDA feature importance and Gaussian-smoothed leadership zones."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg, ndimage
from scipy.stats import rankdata

from .bench import _atomic_write
from .measures import ALL_MEASURES, MeasureId

SEVERAL = "several"
ZONE_FEATURES = ("tau1", "avg_degree", "modularity")
LDA_RIDGE = 1e-6
MIN_SUPPORT = 3
_TIE_RTOL = 1e-12


class MissingMeasure(ValueError):
    pass


class DegenerateClasses(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


@dataclass
class LeaderboardRow:
    measure: MeasureId
    mean_rank: float
    wins_pct: float
    mean_ari: float


def _measure_order(m) -> tuple:
    return (0, ALL_MEASURES.index(m), "") if m in ALL_MEASURES else (1, 0, str(m))


def ari_table(records, graph_ids=None):
    """Pivot eval records into (graph ids, measures, G x M best-ARI matrix)."""
    by_graph: dict[str, dict] = {}
    for r in records:
        by_graph.setdefault(r.graph_id, {})[r.measure] = r.best_ari
    gids = sorted(by_graph if graph_ids is None else set(graph_ids) & set(by_graph))
    measures = sorted({m for g in gids for m in by_graph[g]}, key=_measure_order)
    table = np.zeros((len(gids), len(measures)))
    for i, g in enumerate(gids):
        row = by_graph[g]
        missing = [str(m) for m in measures if m not in row]
        if missing:
            raise MissingMeasure(f"graph {g} lacks records for {', '.join(missing)}")
        table[i] = [row[m] for m in measures]
    return gids, measures, table


def subset_ids(features: dict, subset: str) -> list[str]:
    if subset == "all":
        return sorted(features)
    if subset == "associative":
        return sorted(g for g, f in features.items() if f["gt_modularity"] >= 0)
    if subset == "dissociative":
        return sorted(g for g, f in features.items() if f["gt_modularity"] < 0)
    raise ValueError(f"unknown subset {subset!r}")


def leaderboard(records, features: dict | None = None, subset: str = "all") -> list[LeaderboardRow]:
    """Mean fractional rank, win share and mean best-ARI per measure.

    Every measure tied at a graph's maximum counts as a winner there, so win
    percentages can sum to more than 100.
    """
    ids = None if features is None else subset_ids(features, subset)
    gids, measures, table = ari_table(records, ids)
    if not gids:
        return []
    ranks = rankdata(-table, axis=1, method="average")
    wins = table == table.max(axis=1, keepdims=True)
    rows = [
        LeaderboardRow(m, float(ranks[:, j].mean()), float(100 * wins[:, j].mean()),
                       float(table[:, j].mean()))
        for j, m in enumerate(measures)
    ]
    rows.sort(key=lambda r: (r.mean_rank, _measure_order(r.measure)))
    return rows


# --- LDA -----------------------------------------------------------------------

@dataclass
class LdaResult:
    component_directions: np.ndarray
    explained_variance_ratio: np.ndarray
    feature_contributions: np.ndarray
    feature_names: tuple[str, ...] = ()


def lda_importance(X, y, feature_names=()) -> LdaResult:
    """Fisher discriminant directions of standardized features.

    Solves ``S_b v = lambda S_w v`` with a small ridge on ``S_w``; each row of
    ``component_directions`` is a unit vector, strongest component first.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2 or counts.min() < 2:
        raise DegenerateClasses("need at least two classes with two samples each")
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Z = (X - X.mean(axis=0)) / std
    d = Z.shape[1]
    Sw = np.zeros((d, d))
    Sb = np.zeros((d, d))
    for c, nc in zip(classes, counts):
        Zc = Z[y == c]
        mu = Zc.mean(axis=0)
        Sw += (Zc - mu).T @ (Zc - mu)
        Sb += nc * np.outer(mu, mu)
    Sw += LDA_RIDGE * np.eye(d)
    evals, evecs = linalg.eigh(Sb, Sw)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    vecs = evecs[:, order].T
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    flip = np.sign(vecs[np.arange(d), np.argmax(np.abs(vecs), axis=1)])
    vecs *= flip[:, None]
    total = evals.sum()
    ratio = evals / total if total > 0 else np.eye(d)[0]
    return LdaResult(vecs, ratio, np.abs(vecs), tuple(feature_names))


# --- Gaussian filter -------------------------------------------------------------

@dataclass(frozen=True)
class FilterConfig:
    sigma: float = 0.6

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def cutoff(self) -> float:
        return 3 * self.sigma


@dataclass
class LeadershipCell:
    """``point`` is in normalized feature space; ``raw_point`` in original units."""

    point: tuple[float, ...]
    winner: str | None
    smoothed_ari: dict[str, float]
    support: int
    raw_point: tuple[float, ...] = ()


@dataclass
class LeadershipMap:
    cells: list[LeadershipCell]
    labels: list[str]
    axes: list[np.ndarray]
    win_counts: dict[str, int] = field(default_factory=dict)
    components: dict[str, int] = field(default_factory=dict)

    def winner_grid(self) -> np.ndarray:
        res = tuple(len(a) for a in self.axes)
        return np.array([c.winner for c in self.cells], dtype=object).reshape(res)


def _smooth(points, data, aris, config):
    """Support counts and weighted-mean ARIs at each of ``points`` (Q x F)."""
    d2 = ((points[:, None, :] - data[None, :, :]) ** 2).sum(axis=2)
    inside = d2 < config.cutoff ** 2
    w = np.where(inside, np.exp(-d2 / (2 * config.sigma ** 2)), 0.0)
    support = inside.sum(axis=1)
    wsum = w.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        smoothed = (w @ aris) / wsum
    return support, smoothed


def _pick(values: np.ndarray, rank: np.ndarray) -> int:
    """Argmax with near-ties resolved by the lowest ``rank``."""
    best = values.max()
    tied = np.flatnonzero(values >= best - _TIE_RTOL * max(abs(best), 1e-300))
    return int(tied[np.argmin(rank[tied])])


def _priority_rank(labels, priority):
    if priority is None:
        return np.arange(len(labels))
    pos = {p: i for i, p in enumerate(priority)}
    return np.array([pos.get(lab, len(pos) + i) for i, lab in enumerate(labels)])


def gaussian_filter_winner(point, data, aris, labels, config: FilterConfig = FilterConfig(),
                           priority=None) -> LeadershipCell:
    """Leading label near ``point`` after Gaussian smoothing of per-point ARIs.

    ``data`` (N x F) must already be normalized; points farther than 3 sigma
    are ignored and fewer than three neighbours yield no winner.
    """
    point = np.asarray(point, dtype=float)
    support, smoothed = _smooth(point[None, :], np.asarray(data, float),
                                np.asarray(aris, float), config)
    return _cell(point, int(support[0]), smoothed[0], list(labels),
                 _priority_rank(labels, priority))


def _cell(point, support, smoothed, labels, rank, scale=None):
    pt = tuple(map(float, point))
    raw = pt if scale is None else tuple(map(float, point * scale))
    if support < MIN_SUPPORT:
        return LeadershipCell(pt, None, {}, support, raw)
    win = labels[_pick(smoothed, rank)]
    return LeadershipCell(pt, win, dict(zip(labels, map(float, smoothed))), support, raw)


def add_several(aris, labels):
    """Append the synthetic 'several' column: 1 where two or more labels reach ARI = 1."""
    aris = np.asarray(aris, dtype=float)
    flagged = (aris == 1.0).sum(axis=1) >= 2
    return np.column_stack([aris, flagged.astype(float)]), list(labels) + [SEVERAL]


def leadership_map(features, aris, labels, resolution: int = 20,
                   config: FilterConfig = FilterConfig(), priority=None,
                   several: bool = True, chunk: int = 512) -> LeadershipMap:
    """Evaluate the filter on a regular grid over the normalized feature box.

    ``features`` are raw (N x 3) {tau1, avg degree, modularity} values; each is
    divided by its standard deviation before filtering.
    """
    features = np.asarray(features, dtype=float)
    if features.size == 0 or len(features) == 0:
        raise EmptyDataset("no data points")
    aris = np.asarray(aris, dtype=float)
    labels = list(map(str, labels))
    if several:
        aris, labels = add_several(aris, labels)
        if priority is not None:
            priority = list(map(str, priority)) + [SEVERAL]
    rank = _priority_rank(labels, priority)
    scale = features.std(axis=0)
    scale[scale == 0] = 1.0
    data = features / scale
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(data.min(0), data.max(0))]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, data.shape[1])
    cells = []
    for start in range(0, len(mesh), chunk):
        pts = mesh[start:start + chunk]
        support, smoothed = _smooth(pts, data, aris, config)
        cells += [_cell(p, int(s), sm, labels, rank, scale)
                  for p, s, sm in zip(pts, support, smoothed)]
    lmap = LeadershipMap(cells, labels, [a * s for a, s in zip(axes, scale)])
    winners = [c.winner for c in cells if c.winner is not None]
    lmap.win_counts = dict(sorted(Counter(winners).items(), key=lambda kv: (-kv[1], kv[0])))
    grid = lmap.winner_grid()
    for lab in lmap.win_counts:
        _, ncomp = ndimage.label(grid == lab)
        lmap.components[lab] = int(ncomp)
    return lmap


def sigma_diagnostics(features, aris, labels, sigmas, resolution: int = 20,
                      priority=None) -> dict[float, dict[str, int]]:
    """Connected-component count per winner for each candidate sigma."""
    return {
        float(s): leadership_map(features, aris, labels, resolution, FilterConfig(s),
                                 priority).components
        for s in sigmas
    }


# --- joining and reports ------------------------------------------------------------

def zone_inputs(records, features: dict):
    """Raw reduced features (N x 3), best-ARI table and measure names for the filter.

    Graphs without a finite tau1 (not produced by the generator) are dropped.
    Rows follow sorted graph id, so the result does not depend on record order.
    """
    gids, measures, table = ari_table(records, features.keys())
    keep, rows = [], []
    for i, g in enumerate(gids):
        f = features[g]
        row = (f["tau1"], float(np.exp(f["log_avg_degree"])), f["gt_modularity"])
        if all(np.isfinite(row)):
            keep.append(i)
            rows.append(row)
    if not rows:
        raise EmptyDataset("no graphs with complete features")
    return np.asarray(rows), table[keep], [str(m) for m in measures]


def winner_labels(table, labels, priority=None) -> list[str]:
    """Per-graph winner: 'several' if two or more reach ARI = 1, else the best measure."""
    rank = _priority_rank(labels, priority)
    out = []
    for row in np.asarray(table, dtype=float):
        if (row == 1.0).sum() >= 2:
            out.append(SEVERAL)
        else:
            out.append(labels[_pick(row, rank)])
    return out


def write_leaderboard(rows, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["measure", "mean_rank", "wins_pct", "mean_ari"])
    for r in rows:
        w.writerow([str(r.measure), repr(r.mean_rank), repr(r.wins_pct), repr(r.mean_ari)])
    _atomic_write(path, buf.getvalue())


def write_zones(lmap: LeadershipMap, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(ZONE_FEATURES) + ["winner", "support"])
    for c in lmap.cells:
        w.writerow([repr(v) for v in c.raw_point] + [c.winner or "none", c.support])
    _atomic_write(path, buf.getvalue())


def write_zone_summary(lmap: LeadershipMap, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["winner", "cells", "components"])
    for lab, count in lmap.win_counts.items():
        w.writerow([lab, count, lmap.components[lab]])
    _atomic_write(path, buf.getvalue())


def write_sigma_diagnostics(diag: dict, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sigma", "winner", "components"])
    for s, comps in diag.items():
        for lab in sorted(comps):
            w.writerow([repr(s), lab, comps[lab]])
    _atomic_write(path, buf.getvalue())


def write_lda(result: LdaResult, csv_path, report_path) -> None:
    names = list(result.feature_names) or [f"f{i}" for i in range(result.feature_contributions.shape[1])]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["component", "explained_variance_ratio"] + names)
    for i, (ratio, contrib) in enumerate(zip(result.explained_variance_ratio,
                                             result.feature_contributions)):
        w.writerow([i, repr(float(ratio))] + [repr(float(c)) for c in contrib])
    _atomic_write(csv_path, buf.getvalue())
    lines = ["LDA feature importance", ""]
    for i, (ratio, contrib) in enumerate(zip(result.explained_variance_ratio,
                                             result.feature_contributions)):
        top = names[int(np.argmax(contrib))]
        weights = ", ".join(f"{n}={c:.3f}" for n, c in zip(names, contrib))
        lines.append(f"component {i}: ratio {ratio:.4f}; strongest {top}; |w|: {weights}")
    _atomic_write(report_path, "\n".join(lines) + "\n")


def plot_slices(lmap: LeadershipMap, out_dir, n_slices: int = 4) -> list[Path]:
    """One PNG per axis with ``n_slices`` evenly spaced fixed-coordinate panels."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = lmap.winner_grid()
    names = sorted({c.winner for c in lmap.cells if c.winner is not None})
    code = {n: i for i, n in enumerate(names)}
    coded = np.vectorize(lambda w: np.nan if w is None else code[w], otypes=[float])(grid)
    cmap = plt.get_cmap("tab20", max(len(names), 1))
    paths = []
    res = grid.shape[0]
    picks = np.unique(np.linspace(0, res - 1, n_slices).round().astype(int))
    for axis, fname in enumerate(ZONE_FEATURES):
        other = [a for a in range(3) if a != axis]
        fig, axs = plt.subplots(1, len(picks), figsize=(4 * len(picks), 4), squeeze=False)
        for ax, idx in zip(axs[0], picks):
            sl = np.take(coded, idx, axis=axis)
            ax.imshow(sl.T, origin="lower", cmap=cmap, vmin=-0.5, vmax=len(names) - 0.5,
                      aspect="auto", interpolation="nearest",
                      extent=[lmap.axes[other[0]][0], lmap.axes[other[0]][-1],
                              lmap.axes[other[1]][0], lmap.axes[other[1]][-1]])
            ax.set_title(f"{fname} = {lmap.axes[axis][idx]:.3g}")
            ax.set_xlabel(ZONE_FEATURES[other[0]])
            ax.set_ylabel(ZONE_FEATURES[other[1]])
        handles = [plt.Rectangle((0, 0), 1, 1, color=cmap(code[n])) for n in names]
        fig.legend(handles, names, loc="lower center", ncol=min(len(names), 8), fontsize=8)
        fig.tight_layout(rect=(0, 0.1, 1, 1))
        path = out_dir / f"slices_{fname}.png"
        fig.savefig(path, dpi=100)
        plt.close(fig)
        paths.append(path)
    return paths
