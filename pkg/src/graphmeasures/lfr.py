"""LFR-style benchmark graphs with power-law degrees and community sizes.

Construction: sample a degree sequence and community sizes, place nodes into
communities that can host their internal degree, wire internal and external
stubs with the configuration model, then repair self-loops, multi-edges and
misplaced external edges by degree-preserving edge swaps.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph, is_connected

TAU_POWER = 0.7
DEGREE_TOL = 0.10
MIXING_TOL = 0.05
MAX_ATTEMPTS = 20
SWAP_FACTOR = 10


class GenerationFailed(RuntimeError):
    pass


class InfeasibleParameters(GenerationFailed):
    """Raised before any attempt when the degree target cannot be met."""


def tilde_tau(tau: float) -> float:
    """Map an exponent in (1, inf) onto (0, 1)."""
    return 1.0 - 1.0 / tau ** TAU_POWER


def tau_from_tilde(tt: float) -> float:
    return (1.0 / (1.0 - tt)) ** (1.0 / TAU_POWER)


@dataclass(frozen=True)
class LFRParams:
    n: int
    tau1: float
    tau2: float
    mu: float
    avg_degree: float
    max_degree: int | None = None
    min_community: int | None = None
    max_community: int | None = None

    def __post_init__(self):
        if self.n < 10:
            raise ValueError(f"n must be at least 10, got {self.n}")
        if not (self.tau1 > 1 and self.tau2 > 1):
            raise ValueError("power-law exponents must exceed 1")
        if not 0 <= self.mu <= 1:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if not 1 <= self.avg_degree <= self.n - 1:
            raise ValueError(f"avg_degree must lie in [1, n-1], got {self.avg_degree}")

    @property
    def degree_cap(self) -> int:
        return self.n - 1 if self.max_degree is None else min(self.max_degree, self.n - 1)


@dataclass(frozen=True)
class SampledConfig:
    params: LFRParams
    tilde_tau1: float
    tilde_tau2: float
    density: float
    seed: int

    @classmethod
    def from_params(cls, params: LFRParams, seed: int) -> SampledConfig:
        return cls(params, tilde_tau(params.tau1), tilde_tau(params.tau2),
                   params.avg_degree / (params.n - 1), int(seed))


@dataclass
class GeneratedGraph:
    graph: Graph
    config: SampledConfig
    realized_mixing: float
    realized_mean_degree: float
    attempts: int

    def metadata(self) -> dict:
        return {
            "params": asdict(self.config.params),
            "tilde_tau1": self.config.tilde_tau1,
            "tilde_tau2": self.config.tilde_tau2,
            "density": self.config.density,
            "seed": self.config.seed,
            "realized_mixing": self.realized_mixing,
            "realized_mean_degree": self.realized_mean_degree,
            "attempts": self.attempts,
            "degree_tol": DEGREE_TOL,
            "mixing_tol": MIXING_TOL,
            "max_attempts": MAX_ATTEMPTS,
        }


def powerlaw_mean(exponent: float, lo: float, hi: float) -> float:
    """Mean of the continuous density proportional to x**-exponent on [lo, hi]."""
    if hi <= lo:
        return float(lo)
    lq = math.log(hi / lo)
    a = exponent
    if abs(a - 1) < 1e-9:
        return (hi - lo) / lq
    if abs(a - 2) < 1e-9:
        return lq / (1 / lo - 1 / hi)
    return lo * (1 - a) / (2 - a) * math.expm1((2 - a) * lq) / math.expm1((1 - a) * lq)


def sample_powerlaw(exponent: float, lo: float, hi: float, count: int, seed) -> np.ndarray:
    """Integer draws from the bounded power law via its inverse CDF, rounded.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if not 1 <= lo <= hi:
        raise ValueError(f"need 1 <= lo <= hi, got {lo}, {hi}")
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    if hi == lo:
        return np.full(count, int(round(lo)), dtype=np.int64)
    lq = math.log(hi / lo)
    a = exponent
    if abs(a - 1) < 1e-12:
        x = lo * np.exp(u * lq)
    else:
        # x = lo * (1 + u * ((hi/lo)**(1-a) - 1)) ** (1/(1-a)), in log form
        x = lo * np.exp(np.log1p(u * math.expm1((1 - a) * lq)) / (1 - a))
    out = np.floor(x + 0.5).astype(np.int64)
    return np.clip(out, math.ceil(lo), math.floor(hi))


def _degree_lower_bound(exponent: float, target: float, hi: int) -> float:
    """Continuous lower bound whose power-law mean equals ``target``."""
    lo_min = 1.0
    if powerlaw_mean(exponent, lo_min, hi) > target * (1 + DEGREE_TOL) or target > hi:
        raise InfeasibleParameters(
            f"mean degree {target:g} unreachable with exponent {exponent:g} and cap {hi}")
    a, b = lo_min, float(hi)
    for _ in range(200):
        mid = (a + b) / 2
        if powerlaw_mean(exponent, mid, hi) < target:
            a = mid
        else:
            b = mid
    return (a + b) / 2


def _community_sizes(params: LFRParams, min_c: int, max_c: int, rng) -> list[int]:
    n = params.n
    sizes: list[int] = []
    while sum(sizes) < n:
        sizes.append(int(sample_powerlaw(params.tau2, min_c, max_c, 1, rng)[0]))
    sizes[-1] -= sum(sizes) - n
    if sizes[-1] < min_c and len(sizes) > 1:
        leftover = sizes.pop()
        for _ in range(leftover):
            room = [i for i, s in enumerate(sizes) if s < max_c]
            if not room:
                raise GenerationFailed("no community has room for leftover nodes")
            sizes[room[int(rng.integers(len(room)))]] += 1
    return sizes


def _assign(internal: np.ndarray, sizes: list[int], rng) -> np.ndarray:
    """Place nodes, largest internal degree first, into communities that can host them."""
    sizes_arr = np.asarray(sizes)
    free = sizes_arr.copy()
    comm = np.full(len(internal), -1, dtype=np.int64)
    order = np.lexsort((rng.random(len(internal)), -internal))
    for v in order:
        ok = (free > 0) & (sizes_arr - 1 >= internal[v])
        if not ok.any():
            raise GenerationFailed(f"no community can host internal degree {internal[v]}")
        w = np.where(ok, free, 0).astype(float)
        c = int(rng.choice(len(sizes), p=w / w.sum()))
        comm[v] = c
        free[c] -= 1
    return comm


def _pair_stubs(stubs: list[int], rng) -> list[tuple[int, int]]:
    arr = np.asarray(stubs, dtype=np.int64)
    rng.shuffle(arr)
    return [(int(arr[i]), int(arr[i + 1])) for i in range(0, len(arr) - 1, 2)]


def _rewire(edges: list[list[int]], cls: list[int], comm: np.ndarray, rng) -> list[tuple[int, int]]:
    """Degree-preserving swaps within each edge class until every edge is valid.

    Class ``c >= 0`` holds internal edges of community ``c``; class ``-1``
    holds external edges, which must join different communities.
    """
    rand = random.Random(int(rng.integers(0, 2 ** 63 - 1))).random
    comm = comm.tolist()
    count = Counter((u, v) if u < v else (v, u) for u, v in edges)
    by_class: dict[int, list[int]] = {}
    for i, c in enumerate(cls):
        by_class.setdefault(c, []).append(i)

    def bad(i):
        u, v = edges[i]
        if u == v or (cls[i] < 0 and comm[u] == comm[v]):
            return True
        return count[(u, v) if u < v else (v, u)] > 1

    pending = [i for i in range(len(edges)) if bad(i)]
    budget = SWAP_FACTOR * max(len(edges), 1)
    while pending and budget > 0:
        budget -= 1
        pos = int(rand() * len(pending))
        i = pending[pos]
        if not bad(i):
            pending[pos] = pending[-1]
            pending.pop()
            continue
        c = cls[i]
        pool = by_class[c]
        j = pool[int(rand() * len(pool))]
        if j == i:
            continue
        u, v = edges[i]
        x, y = edges[j]
        if rand() < 0.5:
            x, y = y, x
        if u == x or v == y:
            continue
        if c < 0 and (comm[u] == comm[x] or comm[v] == comm[y]):
            continue
        e1 = (u, x) if u < x else (x, u)
        e2 = (v, y) if v < y else (y, v)
        if e1 == e2 or count[e1] > 0 or count[e2] > 0:
            continue
        count[(u, v) if u < v else (v, u)] -= 1
        count[(x, y) if x < y else (y, x)] -= 1
        count[e1] += 1
        count[e2] += 1
        edges[i] = [u, x]
        edges[j] = [v, y]
        if bad(j):
            pending.append(j)
    return sorted({(u, v) if u < v else (v, u) for u, v in edges if u != v})


def _attempt(params: LFRParams, rng, require_connected: bool):
    n, mu = params.n, params.mu
    hi = params.degree_cap
    lo = _degree_lower_bound(params.tau1, params.avg_degree, hi)
    deg = sample_powerlaw(params.tau1, lo, hi, n, rng)
    if deg.sum() % 2:
        up = np.flatnonzero(deg < hi)
        if up.size:
            deg[rng.choice(up)] += 1
        else:
            deg[rng.choice(np.flatnonzero(deg > 1))] -= 1
    if abs(deg.mean() - params.avg_degree) > DEGREE_TOL * params.avg_degree:
        raise GenerationFailed("sampled degree sequence misses the target mean")

    internal = np.floor((1 - mu) * deg + 0.5).astype(np.int64)
    # Smallest community that can host the node with the fewest internal links.
    min_c = params.min_community or max(int(internal.min()) + 1, 3)
    max_c = params.max_community or n
    min_c = min(min_c, n)
    if min_c > max_c:
        raise GenerationFailed(f"min_community {min_c} exceeds max_community {max_c}")
    sizes = _community_sizes(params, min_c, max_c, rng)

    comm = _assign(internal, sizes, rng)
    for c in range(len(sizes)):
        members = np.flatnonzero(comm == c)
        if internal[members].sum() % 2:
            cand = members[internal[members] > 0]
            v = rng.choice(cand)
            internal[v] -= 1
            if mu == 0:
                deg[v] -= 1  # drop the stub rather than create a cross edge
    external = deg - internal
    _check_external_capacity(external, comm, deg.sum() / 2, mu)

    edges: list[list[int]] = []
    cls: list[int] = []
    for c in range(len(sizes)):
        members = np.flatnonzero(comm == c)
        stubs = np.repeat(members, internal[members]).tolist()
        for u, v in _pair_stubs(stubs, rng):
            edges.append([u, v])
            cls.append(c)
    for u, v in _pair_stubs(np.repeat(np.arange(n), external).tolist(), rng):
        edges.append([u, v])
        cls.append(-1)

    simple = _rewire(edges, cls, comm, rng)
    graph = Graph.from_edges(n, simple, _compact(comm))
    mean_deg = 2 * graph.m / n
    mixing = realized_mixing(graph)
    if require_connected and not is_connected(graph):
        raise GenerationFailed("graph is disconnected")
    if abs(mean_deg - params.avg_degree) > DEGREE_TOL * params.avg_degree:
        raise GenerationFailed(f"realized mean degree {mean_deg:.3g} off target")
    if abs(mixing - mu) > MIXING_TOL:
        raise GenerationFailed(f"realized mixing {mixing:.3g} off target {mu:.3g}")
    return graph, mixing, mean_deg


def _check_external_capacity(external, comm, m, mu):
    """Fail early when one community holds most external stubs.

    External stubs of a community can only pair with stubs elsewhere, so at
    least ``(2 * E_max - E_total) / 2`` external edges must end up internal.
    """
    per = np.bincount(comm, weights=external)
    total = per.sum()
    stuck = max(0.0, (2 * per.max() - total) / 2)
    best = (total / 2 - stuck) / m if m else 0.0
    if best < mu - MIXING_TOL:
        raise GenerationFailed(f"mixing cannot exceed {best:.3g}, target {mu:.3g}")


def _compact(labels: np.ndarray) -> list[int]:
    _, inv = np.unique(labels, return_inverse=True)
    return inv.tolist()


def realized_mixing(graph: Graph) -> float:
    """Fraction of edges whose endpoints lie in different communities."""
    if graph.m == 0:
        return 0.0
    c = graph.communities
    return sum(c[u] != c[v] for u, v in graph.edges) / graph.m


def generate_lfr_record(config: SampledConfig, require_connected: bool = True) -> GeneratedGraph:
    """Generate one accepted graph, retrying with fresh sub-seeds.

    Raises :class:`GenerationFailed` when the degree target is unreachable or
    every attempt is rejected.
    """
    seeds = np.random.SeedSequence(config.seed).spawn(MAX_ATTEMPTS)
    last = None
    for attempt, ss in enumerate(seeds, start=1):
        rng = np.random.default_rng(ss)
        try:
            graph, mixing, mean_deg = _attempt(config.params, rng, require_connected)
        except InfeasibleParameters:
            raise
        except GenerationFailed as exc:
            last = exc
            continue
        return GeneratedGraph(graph, config, mixing, mean_deg, attempt)
    raise GenerationFailed(f"no acceptable graph after {MAX_ATTEMPTS} attempts: {last}")


def generate_lfr(config: SampledConfig, require_connected: bool = True) -> Graph:
    return generate_lfr_record(config, require_connected).graph


def sample_lfr_config(n_range=(10, 1500), seed=0) -> SampledConfig:
    """Draw ``n`` uniformly from the open range and the four shape parameters from [0, 1]."""
    rng = np.random.default_rng(seed)
    lo, hi = n_range
    n = int(rng.integers(lo + 1, hi))
    tt1, tt2, mu, density = rng.random(4)
    tt1, tt2 = max(tt1, 1e-12), max(tt2, 1e-12)
    avg_degree = max(2.0, density * (n - 1))
    params = LFRParams(n=n, tau1=tau_from_tilde(tt1), tau2=tau_from_tilde(tt2),
                       mu=float(mu), avg_degree=float(avg_degree))
    return SampledConfig(params, float(tt1), float(tt2), float(density),
                         int(rng.integers(0, 2 ** 63 - 1)))
