import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmeasures.clustering import (
    ClusterInit, ClusteringResult, STRATEGIES, _reseed_empty, cluster_best_trial, default_inits,
    init_assignment, kernel_kmeans_single, run_trials, select_trial,
)
from graphmeasures.graph import derive_matrices
from graphmeasures.measures import kernel_laplacian
from graphmeasures.scoring import ari

from conftest import two_cliques


def inertia_of(K, labels):
    total = 0.0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        sub = K[np.ix_(idx, idx)]
        total += np.trace(sub) - sub.sum() / len(idx)
    return total


def brute_force_best(K, k):
    n = K.shape[0]
    best, arg = np.inf, None
    for labels in itertools.product(range(k), repeat=n - 1):
        lab = np.array((0,) + labels)
        if len(set(lab)) < k:
            continue
        val = inertia_of(K, lab)
        if val < best - 1e-12:
            best, arg = val, lab
    return best, arg


def test_block_diagonal_example():
    K = np.kron(np.eye(2), np.ones((2, 2)))
    for strategy in STRATEGIES:
        res = kernel_kmeans_single(K, 2, ClusterInit(strategy, 3))
        assert ari([0, 0, 1, 1], res.labels) == 1.0
        assert res.inertia == pytest.approx(0.0, abs=1e-12)
    best, _ = brute_force_best(K, 2)
    assert best == pytest.approx(0.0, abs=1e-12)


def test_k_equals_n_and_k_one():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 3))
    K = X @ X.T
    res = kernel_kmeans_single(K, 6, ClusterInit("random-data-points", 1))
    assert sorted(res.labels) == list(range(6))
    assert res.inertia == pytest.approx(0.0, abs=1e-10)
    assert sorted(init_assignment("random-data-points", K, 6, 5)) == list(range(6))
    for strategy in STRATEGIES:
        assert np.all(kernel_kmeans_single(K, 1, ClusterInit(strategy, 2)).labels == 0)


def test_kmeanspp_skips_duplicate_point():
    X = np.array([[0.0, 0], [0, 0], [5, 0], [0, 5], [5, 5]])
    K = X @ X.T
    for seed in range(200):
        lab = init_assignment("kmeans++", K, 4, seed)
        # nodes 0 and 1 coincide: a seed placed on one never pulls the other away
        assert lab[0] == lab[1]


def test_init_determinism_and_nonempty():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 4))
    K = X @ X.T
    for strategy in STRATEGIES:
        a = init_assignment(strategy, K, 7, 42)
        assert np.array_equal(a, init_assignment(strategy, K, 7, 42))
        assert len(np.unique(a)) == 7
    with pytest.raises(ValueError):
        init_assignment("random-partition", K, 31, 0)


def test_select_trial_rules():
    rs = [ClusteringResult(np.zeros(2, int), v, 1, True, modularity=m, trial=i)
          for i, (v, m) in enumerate([(3.0, 0.1), (1.0, 0.3), (2.0, 0.3)])]
    assert select_trial(rs, "inertia").trial == 1
    assert select_trial(rs, "modularity").trial == 1
    with pytest.raises(ValueError):
        select_trial(rs, "silhouette")


def test_forest_kernel_recovers_cliques():
    g = two_cliques(4)
    K = kernel_laplacian("For", 1.0, derive_matrices(g))
    res = cluster_best_trial(K, 2, g, seeds=range(18))
    assert ari(g.labels, res.labels) == 1.0
    best, arg = brute_force_best(K, 2)
    assert ari(arg, g.labels) == 1.0
    assert res.inertia == pytest.approx(best, abs=1e-10)


def test_unanimous_trials():
    lab = np.array([0, 1, 1, 0])
    rs = [ClusteringResult(lab.copy(), 2.0, 1, True, modularity=0.1, trial=i) for i in range(18)]
    for crit in ("inertia", "modularity"):
        assert np.array_equal(select_trial(rs, crit).labels, lab)
        assert select_trial(rs, crit).trial == 0
    res = cluster_best_trial(np.eye(5), 1, seeds=range(18))
    assert np.all(res.labels == 0)


def test_reseed_moves_farthest_point():
    labels = np.array([0, 0, 0, 1])
    own = np.array([0.1, 5.0, 0.2, 0.0])
    assert _reseed_empty(labels, own, 3) == 1
    np.testing.assert_array_equal(labels, [0, 2, 0, 1])


psd = st.integers(0, 2**32 - 1).map(lambda s: np.random.default_rng(s))


@settings(max_examples=30, deadline=None)
@given(psd, st.integers(2, 5), st.sampled_from(STRATEGIES))
def test_inertia_non_increasing(rng, k, strategy):
    X = rng.normal(size=(25, 3))
    X[: 25 // 2] += 3
    K = X @ X.T
    res = kernel_kmeans_single(K, k, ClusterInit(strategy, int(rng.integers(2**32))))
    hist = np.asarray(res.history)
    assert np.all(np.diff(hist) <= 1e-10)
    assert res.inertia >= 0
    assert len(np.unique(res.labels)) == k
    assert res.inertia == pytest.approx(inertia_of(K, res.labels), abs=1e-8)


def test_bit_reproducible_and_relabel_invariant():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(40, 5))
    K = X @ X.T
    a = cluster_best_trial(K, 4, seeds=range(100, 118))
    b = cluster_best_trial(K, 4, seeds=range(100, 118))
    assert np.array_equal(a.labels, b.labels) and a.inertia == b.inertia
    perm = rng.permutation(4)
    assert ari(a.labels, perm[a.labels]) == 1.0


def test_batched_matches_single_trials():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(35, 4))
    K = X @ X.T
    inits = default_inits(base_seed=9)
    batch = run_trials(K, 5, inits)
    for init, r in zip(inits, batch):
        single = kernel_kmeans_single(K, 5, init)
        assert np.array_equal(single.labels, r.labels)


def test_many_clusters_sparse_path():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(80, 3))
    K = X @ X.T
    res = kernel_kmeans_single(K, 30, ClusterInit("kmeans++", 1))
    assert len(np.unique(res.labels)) == 30
    assert res.inertia == pytest.approx(inertia_of(K, res.labels), abs=1e-8)


def test_modularity_criterion_needs_graph():
    with pytest.raises(ValueError):
        cluster_best_trial(np.eye(3), 2, criterion="modularity")
