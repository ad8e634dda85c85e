"""Undirected graphs with planted communities and the matrices derived from them."""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


class GraphError(ValueError):
    pass


class DisconnectedGraph(GraphError):
    pass


class ZeroDegreeNode(GraphError):
    pass


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with one ground-truth community label per node.

    Edges are stored as sorted ``(u, v)`` tuples with ``u < v``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    communities: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"node count must be positive, got {self.n}")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={self.n}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        labels = tuple(int(c) for c in self.communities)
        if len(labels) != self.n:
            raise GraphError(f"expected {self.n} labels, got {len(labels)}")
        k = max(labels) + 1
        if min(labels) < 0 or len(set(labels)) != k:
            raise GraphError("community labels must cover 0..k-1 without gaps")
        object.__setattr__(self, "communities", labels)

    @classmethod
    def from_edges(cls, n, edges, communities=None) -> Graph:
        if communities is None:
            communities = [0] * n
        return cls(int(n), tuple((int(u), int(v)) for u, v in edges), tuple(communities))

    @property
    def k(self) -> int:
        return max(self.communities) + 1

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.communities, dtype=np.int64)

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Edges as an (m, 2) integer array."""
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        if self.edges:
            e = np.asarray(self.edges)
            A[e[:, 0], e[:, 1]] = 1.0
            A[e[:, 1], e[:, 0]] = 1.0
        return A

    def neighbors(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return d


def is_connected(graph: Graph) -> bool:
    """True iff a breadth-first search from node 0 reaches every node."""
    adj = graph.neighbors()
    seen = [False] * graph.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == graph.n


def spectral_radius(A: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest absolute eigenvalue of a nonnegative symmetric matrix by power iteration.

    Iterates on ``A + I`` from the all-ones vector. The shift keeps the Perron
    eigenvalue strictly dominant on bipartite graphs, where ``-rho`` is also an
    eigenvalue of ``A``.
    """
    n = A.shape[0]
    x = np.ones(n) / np.sqrt(n)
    est = 0.0
    for _ in range(max_iter):
        y = A @ x + x
        new = float(x @ y) - 1.0
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(new - est) <= tol * max(abs(new), 1e-300):
            return new
        est = new
    return est


def bfs_distances(A: np.ndarray) -> np.ndarray:
    """All-pairs hop distances; unreachable pairs are ``inf``."""
    return shortest_path(csr_matrix(A), method="D", unweighted=True, directed=False)


@dataclass(eq=False)
class DerivedMatrices:
    """Dense matrices used by the measure formulas.

    Eigendecompositions of ``A``, ``L`` and the normalized adjacency are
    computed lazily and cached, since most kernels are spectral functions of
    one of them.
    """

    A: np.ndarray
    D: np.ndarray
    L: np.ndarray
    P: np.ndarray
    calL: np.ndarray
    C: np.ndarray
    d: np.ndarray
    vol: float
    rho: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @cached_property
    def sqrt_d(self) -> np.ndarray:
        return np.sqrt(self.d)

    @cached_property
    def eig_A(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.A)

    @cached_property
    def eig_L(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.L)

    @cached_property
    def eig_N(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenpairs of the normalized adjacency D^-1/2 A D^-1/2 = I - calL."""
        s = 1.0 / self.sqrt_d
        return np.linalg.eigh(s[:, None] * self.A * s[None, :])


def derive_matrices(graph: Graph) -> DerivedMatrices:
    if graph.n < 2:
        raise GraphError("need at least two nodes")
    A = graph.adjacency()
    d = A.sum(axis=1)
    if np.any(d == 0):
        raise ZeroDegreeNode(f"node {int(np.argmin(d))} has no edges")
    C = bfs_distances(A)
    if not np.all(np.isfinite(C)):
        raise DisconnectedGraph("graph has more than one component")
    D = np.diag(d)
    L = D - A
    P = A / d[:, None]
    s = 1.0 / np.sqrt(d)
    calL = s[:, None] * L * s[None, :]
    calL = (calL + calL.T) / 2
    return DerivedMatrices(
        A=A, D=D, L=L, P=P, calL=calL, C=C, d=d,
        vol=float(A.sum()), rho=spectral_radius(A),
    )


# --- text format -----------------------------------------------------------

def format_graph(graph: Graph) -> str:
    lines = [f"{graph.n} {graph.k}"]
    lines += [f"{u} {v}" for u, v in graph.edges]
    lines.append("labels " + " ".join(str(c) for c in graph.communities))
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    rows = [r.split() for r in text.strip().splitlines()]
    if len(rows) < 2 or rows[-1][0] != "labels":
        raise GraphError("malformed graph file: missing header or labels trailer")
    n, k = int(rows[0][0]), int(rows[0][1])
    edges = [(int(r[0]), int(r[1])) for r in rows[1:-1]]
    g = Graph.from_edges(n, edges, [int(x) for x in rows[-1][1:]])
    if g.k != k:
        raise GraphError(f"header declares {k} communities, labels use {g.k}")
    return g


def write_graph(graph: Graph, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(format_graph(graph))
    os.replace(tmp, path)


def read_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())
