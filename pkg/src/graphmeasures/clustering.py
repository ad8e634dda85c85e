"""Kernel k-means with three initialization strategies and best-of-trials selection.

Distances are taken in the feature space implied by the kernel::

    d2(i, c) = K[i, i] - 2/|c| sum_{j in c} K[i, j] + 1/|c|^2 sum_{j, l in c} K[j, l]

Independent trials are advanced together so that the expensive ``K @ H``
products are done as one matrix product per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .scoring import modularity

STRATEGIES = ("random-data-points", "kmeans++", "random-partition")
TRIALS_PER_STRATEGY = 6
MAX_ITER = 100
CRITERIA = ("inertia", "modularity")

# Above this many clusters, per-cluster column sums are cheaper than a dense
# product with the one-hot membership matrix.
_DENSE_K_LIMIT = 24


@dataclass(frozen=True)
class ClusterInit:
    strategy: str
    seed: int

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown init strategy {self.strategy!r}")


@dataclass
class ClusteringResult:
    labels: np.ndarray
    inertia: float
    iterations: int
    converged: bool
    modularity: float | None = None
    reseeds: int = 0
    trial: int = 0
    init: ClusterInit | None = None
    history: list[float] = field(default_factory=list, repr=False)


def _pair_d2(K: np.ndarray, diag: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Squared kernel distance from every node to each node in ``cols``; shape (n, len(cols))."""
    return diag[:, None] - 2 * K[:, cols] + diag[None, cols]


def _centroid_d2(K: np.ndarray, diag: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Kernel distance from every node to every cluster centroid of one labeling."""
    n = K.shape[0]
    counts = np.bincount(labels, minlength=k)
    if k <= _DENSE_K_LIMIT:
        H = np.zeros((n, k))
        H[np.arange(n), labels] = 1.0
        KH = K @ H
    else:
        order = np.argsort(labels, kind="stable")
        present = np.flatnonzero(counts)
        starts = np.concatenate(([0], np.cumsum(counts[present])[:-1]))
        KH = np.zeros((n, k))
        KH[:, present] = np.add.reduceat(K[:, order], starts, axis=1)
    within = np.bincount(labels, weights=KH[np.arange(n), labels], minlength=k)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = diag[:, None] - 2 * KH / counts + within / counts.astype(float) ** 2
    d2[:, counts == 0] = np.inf
    return d2


def _batched_centroid_d2(K, diag, labels_batch, k):
    """Same as :func:`_centroid_d2` for a stack of labelings of shape (T, n)."""
    T, n = labels_batch.shape
    if k > _DENSE_K_LIMIT or T == 1:
        return np.stack([_centroid_d2(K, diag, lab, k) for lab in labels_batch])
    H = np.zeros((n, T, k))
    H[np.arange(n)[:, None], np.arange(T)[None, :], labels_batch.T] = 1.0
    KH = (K @ H.reshape(n, T * k)).reshape(n, T, k)
    counts = H.sum(axis=0)  # (T, k)
    within = np.einsum("itc,itc->tc", H, KH)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = diag[None, :, None] - 2 * KH.transpose(1, 0, 2) / counts[:, None, :] \
            + (within / counts ** 2)[:, None, :]
    d2 = np.where(counts[:, None, :] == 0, np.inf, d2)
    return d2


def _reseed_empty(labels: np.ndarray, own: np.ndarray, k: int) -> int:
    """Move the node farthest from its centroid into each empty cluster.

    ``own`` holds each node's squared distance to the centroid it was just
    assigned to; nodes that are alone in their cluster are never moved.
    """
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return 0
    own = own.astype(float).copy()
    moved = 0
    for c in empty:
        own[counts[labels] <= 1] = -np.inf
        i = int(np.argmax(own))
        if own[i] == -np.inf:
            break
        counts[labels[i]] -= 1
        counts[c] += 1
        labels[i] = c
        own[i] = -np.inf
        moved += 1
    return moved


def _inertia(d2_own: np.ndarray) -> float:
    # Non-PSD similarity matrices can give negative squared distances.
    return float(np.maximum(d2_own, 0.0).sum())


def init_assignment(strategy: str, K: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Initial labels for one trial; deterministic in ``seed``."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    diag = np.diag(K).copy()
    if strategy == "random-partition":
        labels = rng.integers(0, k, size=n)
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            donors = np.flatnonzero(np.bincount(labels, minlength=k)[labels] > 1)
            labels[rng.choice(donors)] = c
        return labels.astype(np.int64)
    if strategy == "random-data-points":
        seeds = rng.choice(n, size=k, replace=False)
    elif strategy == "kmeans++":
        seeds = [int(rng.integers(n))]
        closest = np.maximum(_pair_d2(K, diag, np.array(seeds))[:, 0], 0.0)
        for _ in range(1, k):
            p = closest.copy()
            p[seeds] = 0.0
            total = p.sum()
            if total > 0 and np.isfinite(total):
                nxt = int(rng.choice(n, p=p / total))
            else:
                rest = np.setdiff1d(np.arange(n), seeds)
                nxt = int(rng.choice(rest))
            seeds.append(nxt)
            closest = np.minimum(closest, np.maximum(_pair_d2(K, diag, np.array([nxt]))[:, 0], 0.0))
        seeds = np.asarray(seeds)
    else:
        raise ValueError(f"unknown init strategy {strategy!r}")
    labels = np.argmin(_pair_d2(K, diag, seeds), axis=1)
    labels[seeds] = np.arange(k)
    return labels.astype(np.int64)


def run_trials(K: np.ndarray, k: int, inits: list[ClusterInit],
               max_iter: int = MAX_ITER) -> list[ClusteringResult]:
    """Run one kernel k-means trial per init, advancing all trials in lockstep."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    diag = np.diag(K).copy()
    labels = np.stack([init_assignment(i.strategy, K, k, i.seed) for i in inits])
    T = len(inits)
    iters = np.zeros(T, dtype=int)
    converged = np.zeros(T, dtype=bool)
    reseeds = np.zeros(T, dtype=int)
    history: list[list[float]] = [[] for _ in range(T)]
    final_inertia = np.zeros(T)
    active = np.arange(T)
    rows = np.arange(n)
    while active.size:
        d2 = _batched_centroid_d2(K, diag, labels[active], k)
        still = []
        for j, t in enumerate(active):
            cur = labels[t]
            own = d2[j, rows, cur]
            history[t].append(_inertia(own))
            if iters[t] >= max_iter:
                final_inertia[t] = history[t][-1]
                continue
            best = np.argmin(d2[j], axis=1)
            new = np.where(d2[j, rows, best] < own, best, cur)
            iters[t] += 1
            if np.array_equal(new, cur):
                converged[t] = True
                final_inertia[t] = history[t][-1]
                continue
            reseeds[t] += _reseed_empty(new, d2[j, rows, new], k)
            labels[t] = new
            still.append(t)
        active = np.asarray(still, dtype=int)
    return [
        ClusteringResult(
            labels=labels[t].copy(), inertia=float(final_inertia[t]),
            iterations=int(iters[t]), converged=bool(converged[t]),
            reseeds=int(reseeds[t]), trial=t, init=inits[t], history=history[t],
        )
        for t in range(T)
    ]


def kernel_kmeans_single(K: np.ndarray, k: int, init: ClusterInit,
                         max_iter: int = MAX_ITER) -> ClusteringResult:
    return run_trials(K, k, [init], max_iter=max_iter)[0]


def default_inits(seeds=None, base_seed: int = 0) -> list[ClusterInit]:
    """Six trials per strategy; ``seeds`` overrides the per-trial seeds."""
    total = TRIALS_PER_STRATEGY * len(STRATEGIES)
    if seeds is None:
        seeds = np.random.SeedSequence(base_seed).generate_state(total, dtype=np.uint64)
    seeds = [int(s) for s in seeds]
    if len(seeds) != total:
        raise ValueError(f"expected {total} seeds, got {len(seeds)}")
    return [ClusterInit(STRATEGIES[i // TRIALS_PER_STRATEGY], seeds[i]) for i in range(total)]


def select_trial(results: list[ClusteringResult], criterion: str) -> ClusteringResult:
    """Minimum inertia or maximum modularity; the first trial wins ties."""
    if criterion == "inertia":
        return results[int(np.argmin([r.inertia for r in results]))]
    if criterion == "modularity":
        return results[int(np.argmax([r.modularity for r in results]))]
    raise ValueError(f"unknown criterion {criterion!r}")


def cluster_best_trial(K: np.ndarray, k: int, graph: Graph | None = None,
                       criterion: str = "inertia", seeds=None, base_seed: int = 0,
                       max_iter: int = MAX_ITER) -> ClusteringResult:
    """Run the 6+6+6 trials and return the one preferred by ``criterion``."""
    if criterion == "modularity" and graph is None:
        raise ValueError("modularity criterion needs the graph")
    results = run_trials(K, k, default_inits(seeds, base_seed), max_iter=max_iter)
    if graph is not None and graph.m > 0:
        for r in results:
            r.modularity = modularity(graph, r.labels)
    return select_trial(results, criterion)
