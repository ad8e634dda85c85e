import itertools
from math import comb

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphmeasures.graph import Graph
from graphmeasures.scoring import LengthMismatch, NoEdges, ari, contingency, modularity

from conftest import from_nx


def set_partitions(n):
    """All labelings of n items up to renaming (restricted growth strings)."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for c in range(top + 2):
            yield from grow(prefix + [c], max(top, c))
    yield from grow([0], 0)


def ari_pairs(a, b):
    n = len(a)
    both = only_a = only_b = 0
    for i, j in itertools.combinations(range(n), 2):
        sa, sb = a[i] == a[j], b[i] == b[j]
        both += sa and sb
        only_a += sa and not sb
        only_b += sb and not sa
    pa, pb, total = both + only_a, both + only_b, comb(n, 2)
    expected = pa * pb / total
    denom = (pa + pb) / 2 - expected
    return 1.0 if denom == 0 else (both - expected) / denom


def test_ari_examples():
    assert ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
    assert ari([0, 1, 2, 3], [0, 0, 0, 0]) == 0.0
    assert ari([0, 0, 0], [5, 5, 5]) == 1.0


def test_ari_matches_pair_counting_exhaustively():
    checked = 0
    for n in range(2, 7):
        parts = list(set_partitions(n))
        for a in parts:
            for b in parts:
                assert ari(a, b) == pytest.approx(ari_pairs(a, b), abs=1e-12)
                checked += 1
    assert checked == sum(len(list(set_partitions(n))) ** 2 for n in range(2, 7))


labelings = st.integers(2, 30).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 5), min_size=n, max_size=n),
                        st.lists(st.integers(0, 5), min_size=n, max_size=n)))


@given(labelings, st.permutations(range(6)))
def test_ari_symmetry_and_relabeling(pair, perm):
    a, b = pair
    assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-12)
    relabeled = [perm[x] for x in a]
    assert ari(relabeled, b) == pytest.approx(ari(a, b), abs=1e-12)
    if len(set(a)) >= 2:
        assert ari(a, a) == 1.0
    assert -1.0 <= ari(a, b) <= 1.0


def test_contingency_counts():
    t = contingency([0, 0, 1, 1, 1], ["x", "y", "y", "y", "x"])
    np.testing.assert_array_equal(t, [[1, 1], [1, 2]])


def test_ari_errors():
    with pytest.raises(LengthMismatch):
        ari([0, 1], [0, 1, 1])


def test_modularity_examples():
    k3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert modularity(k3, [0, 0, 0]) == 0.0
    two = Graph.from_edges(4, [(0, 1), (2, 3)])
    assert modularity(two, [0, 0, 1, 1]) == 0.5
    cliques = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
    # m = 7, e_c = 3 and d_c = 7 per clique: 6/7 - 2 * (1/2)**2
    assert modularity(cliques, [0, 0, 0, 1, 1, 1]) == pytest.approx(5 / 14, abs=1e-12)
    with pytest.raises(NoEdges):
        modularity(Graph.from_edges(2, []), [0, 1])
    with pytest.raises(LengthMismatch):
        modularity(k3, [0, 1])


@pytest.mark.parametrize("seed", range(10))
def test_modularity_against_networkx(seed):
    g = nx.gnm_random_graph(25, 60, seed=seed)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 4, 25)
    ours = modularity(from_nx(g), labels)
    groups = [set(np.flatnonzero(labels == c)) for c in np.unique(labels)]
    assert ours == pytest.approx(nx.community.modularity(g, groups), abs=1e-12)
    perm = rng.permutation(4)
    assert modularity(from_nx(g), perm[labels]) == pytest.approx(ours, abs=1e-12)
