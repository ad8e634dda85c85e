"""Partition agreement (adjusted Rand index) and Newman modularity."""

from __future__ import annotations

import numpy as np

from .graph import Graph


class LengthMismatch(ValueError):
    pass


class NoEdges(ValueError):
    pass


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def contingency(y_true, y_pred) -> np.ndarray:
    _, a = np.unique(np.asarray(y_true), return_inverse=True)
    _, b = np.unique(np.asarray(y_pred), return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def ari(y_true, y_pred) -> float:
    """Hubert-Arabie adjusted Rand index from the contingency table.

    A vanishing denominator only happens when both partitions are the same
    trivial partition (one cluster, or all singletons); that returns 1.0.
    """
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} != {len(y_pred)}")
    n = len(y_true)
    if n < 2:
        raise ValueError("need at least two labels")
    table = contingency(y_true, y_pred)
    index = _comb2(table).sum()
    sa = _comb2(table.sum(axis=1)).sum()
    sb = _comb2(table.sum(axis=0)).sum()
    expected = sa * sb / _comb2(n)
    denom = (sa + sb) / 2 - expected
    if denom == 0:
        return 1.0
    return float((index - expected) / denom)


def modularity(graph: Graph, labels) -> float:
    """Newman modularity ``sum_c e_c/m - (d_c/2m)^2``."""
    m = graph.m
    if m == 0:
        raise NoEdges("modularity is undefined without edges")
    labels = np.asarray(labels)
    if labels.shape[0] != graph.n:
        raise LengthMismatch(f"{labels.shape[0]} labels for {graph.n} nodes")
    _, lab = np.unique(labels, return_inverse=True)
    e = graph.edge_array
    lu, lv = lab[e[:, 0]], lab[e[:, 1]]
    kc = lab.max() + 1
    intra = np.bincount(lu[lu == lv], minlength=kc)
    deg = np.bincount(lu, minlength=kc) + np.bincount(lv, minlength=kc)
    return float((intra / m - (deg / (2 * m)) ** 2).sum())

