import networkx as nx
import numpy as np
import pytest

from graphmeasures.graph import Graph, derive_matrices


def from_nx(g, communities=None) -> Graph:
    g = nx.convert_node_labels_to_integers(g)
    return Graph.from_edges(g.number_of_nodes(), g.edges(), communities)


def connected_atlas(max_n=7):
    """All connected graphs from the networkx atlas with 2..max_n nodes."""
    return [g for g in nx.graph_atlas_g()[1:]
            if 2 <= g.number_of_nodes() <= max_n and nx.is_connected(g)]


def trees(max_n=8):
    for n in range(2, max_n + 1):
        yield from nx.nonisomorphic_trees(n)


def floyd_warshall(A):
    n = A.shape[0]
    D = np.where(A > 0, 1.0, np.inf)
    np.fill_diagonal(D, 0.0)
    for k in range(n):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


def two_cliques(size=4) -> Graph:
    edges = [(i, j) for i in range(size) for j in range(i + 1, size)]
    edges += [(i + size, j + size) for i, j in edges]
    edges.append((size - 1, size))
    return Graph.from_edges(2 * size, edges, [0] * size + [1] * size)


@pytest.fixture
def p2():
    return derive_matrices(Graph.from_edges(2, [(0, 1)]))


@pytest.fixture
def k3():
    return derive_matrices(Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)]))


@pytest.fixture(scope="session")
def atlas7():
    return connected_atlas(7)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
