"""The 25 parametric node-closeness measures used for kernel k-means.

Every measure takes a normalized parameter ``x`` in [0, 1], maps it into the
family's native domain and returns a symmetric similarity matrix.  Most
families are spectral functions of the adjacency matrix, the Laplacian or the
normalized adjacency ``N = D^-1/2 A D^-1/2``; those are evaluated through the
cached eigendecompositions held by :class:`~graphmeasures.graph.DerivedMatrices`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ._linalg import spectral_apply
from .graph import DerivedMatrices

PARAM_EPS = 1e-4
LOG_FLOOR = 1e-12
DF_TOL = 1e-10
DF_MAX_TERMS = 200
RSP_RADIUS_MARGIN = 1e-9
RCOND_MIN = 1e-12

# Sign in front of the scaled commute-time proximity inside the sigmoid.
# -1 gives sigmoid(-t * proximity); +1 treats the proximity as a similarity.
DEFAULT_SIGMOID_SIGN = -1

FAMILIES = (
    "Katz", "Comm", "DF", "For", "Heat", "NHeat", "Abs",
    "PPR", "MPPR", "HPR", "RSP", "FE", "SCT", "SCCT", "SP-CT",
)
LOG_FAMILIES = frozenset(
    ("Katz", "Comm", "DF", "For", "Heat", "NHeat", "Abs", "PPR", "MPPR", "HPR")
)
_ALIASES = {"ModifPPR": "MPPR", "HeatPR": "HPR", "SPCT": "SP-CT"}

_PARAM_NAME = {
    "Katz": "alpha", "PPR": "alpha", "MPPR": "alpha",
    "RSP": "beta", "FE": "beta", "SP-CT": "lambda",
}


class MeasureError(ArithmeticError):
    """A kernel could not be built for the requested parameter."""


class SingularMatrix(MeasureError):
    pass


class SeriesDivergence(MeasureError):
    pass


class SpectralRadiusExceeded(MeasureError):
    pass


class NonFiniteKernel(MeasureError):
    pass


class NonPositiveEntryWarning(RuntimeWarning):
    pass


class InvalidMeasure(ValueError):
    pass


@dataclass(frozen=True, order=True)
class MeasureId:
    family: str
    variant: str = "plain"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidMeasure(f"unknown measure family {self.family!r}")
        if self.variant not in ("plain", "log"):
            raise InvalidMeasure(f"unknown variant {self.variant!r}")
        if self.variant == "log" and self.family not in LOG_FAMILIES:
            raise InvalidMeasure(f"{self.family} has no log variant")

    @property
    def name(self) -> str:
        return ("log" + self.family) if self.variant == "log" else self.family

    @classmethod
    def parse(cls, name: str) -> MeasureId:
        name = name.strip()
        variant = "plain"
        if name.startswith("log"):
            name, variant = name[3:], "log"
        return cls(_ALIASES.get(name, name), variant)

    def __str__(self):
        return self.name


ALL_MEASURES: tuple[MeasureId, ...] = tuple(
    MeasureId(f, v)
    for f in FAMILIES
    for v in (("plain", "log") if f in LOG_FAMILIES else ("plain",))
)


def measure_index(measure: MeasureId) -> int:
    return ALL_MEASURES.index(measure)


@dataclass(frozen=True)
class MeasureParam:
    x: float
    name: str
    value: float


@dataclass
class KernelMatrix:
    values: np.ndarray
    measure: MeasureId
    param: MeasureParam
    clamped: int = 0


def map_param(measure: MeasureId, x: float, matrices: DerivedMatrices) -> MeasureParam:
    """Map a grid value in [0, 1] onto the native parameter of ``measure``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"grid value must lie in [0, 1], got {x}")
    fam = measure.family
    name = _PARAM_NAME.get(fam, "t")
    if fam == "SP-CT":
        return MeasureParam(x, name, float(x))
    xc = min(max(x, PARAM_EPS), 1.0 - PARAM_EPS)
    if fam == "Katz":
        value = xc / matrices.rho
    elif fam in ("PPR", "MPPR"):
        value = xc
    else:
        value = xc / (1.0 - xc)
    return MeasureParam(float(x), name, float(value))


def distance_to_kernel(Dmat: np.ndarray) -> np.ndarray:
    """Double-centre a distance matrix: ``K = -H D H`` with ``H = I - E/n``."""
    Dmat = np.asarray(Dmat, dtype=float)
    row = Dmat.mean(axis=1, keepdims=True)
    col = Dmat.mean(axis=0, keepdims=True)
    return -(Dmat - row - col + Dmat.mean())


def _check_invertible(g: np.ndarray, what: str) -> None:
    a = np.abs(g)
    if a.max() == 0 or a.min() / a.max() < RCOND_MIN:
        raise SingularMatrix(f"{what} is numerically singular")


def _double_factorial_series(z: np.ndarray) -> np.ndarray:
    """Sum ``z**k / k!!`` elementwise, stopping on the relative term size."""
    total = np.ones_like(z)
    prev2 = np.ones_like(z)  # term k-2
    prev1 = z.copy()  # term k-1
    total = total + prev1
    z2 = z * z
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(2, DF_MAX_TERMS + 1):
            term = prev2 * z2 / k
            total = total + term
            if not np.all(np.isfinite(total)):
                raise SeriesDivergence("double-factorial series overflowed")
            if np.abs(term).max() < DF_TOL * np.abs(total).max():
                return total
            prev2, prev1 = prev1, term
    raise SeriesDivergence(f"double-factorial series not converged after {DF_MAX_TERMS} terms")


def kernel_adjacency(family: str, value: float, matrices: DerivedMatrices) -> np.ndarray:
    """Katz ``(I - aA)^-1``, Comm ``expm(tA)`` and DF ``sum t^k/k!! A^k``."""
    lam, V = matrices.eig_A
    if family == "Katz":
        g = 1.0 - value * lam
        _check_invertible(g, "I - alpha*A")
        f = 1.0 / g
    elif family == "Comm":
        with np.errstate(over="ignore"):
            f = np.exp(value * lam)
    elif family == "DF":
        f = _double_factorial_series(value * lam)
    else:
        raise InvalidMeasure(f"{family} is not adjacency-based")
    with np.errstate(over="ignore", invalid="ignore"):
        return spectral_apply(V, f)


def kernel_laplacian(family: str, value: float, matrices: DerivedMatrices) -> np.ndarray:
    """For ``(I + tL)^-1``, Heat ``expm(-tL)``, NHeat ``expm(-t calL)``, Abs ``(tA + L)^-1``."""
    if family in ("For", "Heat"):
        mu, V = matrices.eig_L
        if family == "For":
            return spectral_apply(V, 1.0 / (1.0 + value * mu))
        return spectral_apply(V, np.exp(-value * mu))
    nu, V = matrices.eig_N
    if family == "NHeat":
        return spectral_apply(V, np.exp(-value * (1.0 - nu)))
    if family == "Abs":
        # tA + L = D - (1 - t)A = D^1/2 (I - (1 - t)N) D^1/2
        g = 1.0 - (1.0 - value) * nu
        _check_invertible(g, "tA + L")
        s = 1.0 / matrices.sqrt_d
        return s[:, None] * spectral_apply(V, 1.0 / g) * s[None, :]
    raise InvalidMeasure(f"{family} is not Laplacian-based")


def kernel_markov(family: str, value: float, matrices: DerivedMatrices,
                  symmetrize: bool = True) -> np.ndarray:
    """PPR ``(I - aP)^-1``, MPPR ``(D - aA)^-1`` and HPR ``expm(-t(I - P))``.

    All three are similar to spectral functions of ``N`` because
    ``P = D^-1/2 N D^1/2``.
    """
    nu, V = matrices.eig_N
    sd = matrices.sqrt_d
    if family in ("PPR", "MPPR"):
        g = 1.0 - value * nu
        _check_invertible(g, "I - alpha*P")
        core = spectral_apply(V, 1.0 / g)
        if family == "PPR":
            K = core * (sd[None, :] / sd[:, None])
        else:
            K = core / np.outer(sd, sd)
    elif family == "HPR":
        core = spectral_apply(V, np.exp(-value * (1.0 - nu)))
        K = core * (sd[None, :] / sd[:, None])
    else:
        raise InvalidMeasure(f"{family} is not Markov-based")
    if symmetrize:
        K = (K + K.T) / 2
    return K


def commute_time_kernel(matrices: DerivedMatrices) -> np.ndarray:
    """Moore-Penrose pseudoinverse of the Laplacian."""
    if "Lpinv" not in matrices._cache:
        mu, V = matrices.eig_L
        inv = np.zeros_like(mu)
        nz = mu > 1e-9 * max(mu.max(), 1.0)
        inv[nz] = 1.0 / mu[nz]
        matrices._cache["Lpinv"] = spectral_apply(V, inv)
    return matrices._cache["Lpinv"]


def commute_time_distance(matrices: DerivedMatrices) -> np.ndarray:
    if "Dct" not in matrices._cache:
        Lp = commute_time_kernel(matrices)
        dg = np.diag(Lp)
        Dct = matrices.vol * (dg[:, None] + dg[None, :] - 2 * Lp)
        np.fill_diagonal(Dct, 0.0)
        matrices._cache["Dct"] = Dct
    return matrices._cache["Dct"]


@dataclass
class RSPIntermediate:
    W: np.ndarray
    Z: np.ndarray
    S: np.ndarray
    Cbar: np.ndarray
    Ztilde: np.ndarray
    Phi: np.ndarray
    clamped: int = 0


def rsp_intermediate(beta: float, matrices: DerivedMatrices) -> RSPIntermediate:
    C = matrices.C
    W = matrices.P * np.exp(-beta * C)
    # W = D^-1 B with B symmetric, so its spectrum is that of D^-1/2 B D^-1/2;
    # the max row sum bounds it from above.
    radius = W.sum(axis=1).max()
    if radius >= 1.0 - RSP_RADIUS_MARGIN:
        s = 1.0 / matrices.sqrt_d
        B = W * matrices.d[:, None]
        radius = np.abs(np.linalg.eigvalsh(s[:, None] * B * s[None, :])).max()
        if radius >= 1.0 - RSP_RADIUS_MARGIN:
            raise SpectralRadiusExceeded(f"spectral radius of W is {radius:.3g}")
    n = matrices.n
    Z = np.linalg.solve(np.eye(n) - W, np.eye(n))
    with np.errstate(divide="ignore", invalid="ignore"):
        S = (Z @ (C * W) @ Z) / Z
        Cbar = S - np.diag(S)[None, :]
        Ztilde = Z / np.diag(Z)[None, :]
    clamped = int(np.count_nonzero(~(Ztilde > 0)))
    if clamped:
        warnings.warn(f"{clamped} non-positive entries clamped before log",
                      NonPositiveEntryWarning, stacklevel=2)
        Ztilde = np.where(Ztilde > 0, Ztilde, np.finfo(float).tiny)
    Phi = -np.log(Ztilde) / beta
    return RSPIntermediate(W=W, Z=Z, S=S, Cbar=Cbar, Ztilde=Ztilde, Phi=Phi, clamped=clamped)


def rsp_distance(beta: float, matrices: DerivedMatrices) -> np.ndarray:
    Cbar = rsp_intermediate(beta, matrices).Cbar
    return (Cbar + Cbar.T) / 2


def fe_distance(beta: float, matrices: DerivedMatrices) -> np.ndarray:
    Phi = rsp_intermediate(beta, matrices).Phi
    return (Phi + Phi.T) / 2


def rsp_fe(family: str, beta: float, matrices: DerivedMatrices) -> np.ndarray:
    inter = rsp_intermediate(beta, matrices)
    if family == "RSP":
        Dm = (inter.Cbar + inter.Cbar.T) / 2
    elif family == "FE":
        Dm = (inter.Phi + inter.Phi.T) / 2
    else:
        raise InvalidMeasure(f"{family} is not a path-based distance")
    if not np.all(np.isfinite(Dm)):
        raise NonFiniteKernel(f"{family} distance is not finite at beta={beta:g}")
    return distance_to_kernel(Dm)


def corrected_commute_time_kernel(matrices: DerivedMatrices) -> np.ndarray:
    """``H D^-1/2 M (I - M)^-1 M D^-1/2 H`` with ``M = D^-1/2 (A - dd'/vol) D^-1/2``."""
    if "Kcct" not in matrices._cache:
        sd = matrices.sqrt_d
        s = 1.0 / sd
        M = s[:, None] * (matrices.A - np.outer(matrices.d, matrices.d) / matrices.vol) * s[None, :]
        mu, V = np.linalg.eigh((M + M.T) / 2)
        g = 1.0 - mu
        _check_invertible(g, "I - M")
        inner = spectral_apply(V, mu * mu / g)
        inner = s[:, None] * inner * s[None, :]
        matrices._cache["Kcct"] = distance_to_kernel(-inner)
    return matrices._cache["Kcct"]


def sigmoid_ct(family: str, t: float, matrices: DerivedMatrices,
               sign: int = DEFAULT_SIGMOID_SIGN) -> np.ndarray:
    """Elementwise logistic of the commute-time proximity scaled by its std."""
    if family == "SCT":
        K = commute_time_kernel(matrices)
    elif family == "SCCT":
        K = corrected_commute_time_kernel(matrices)
    else:
        raise InvalidMeasure(f"{family} is not a sigmoid commute-time kernel")
    std = K.std()
    if std == 0:
        raise SingularMatrix("commute-time proximity has zero spread")
    return expit(sign * t * K / std)


def sp_ct_components(matrices: DerivedMatrices) -> tuple[np.ndarray, np.ndarray]:
    """Shortest-path and commute-time kernels, each scaled to unit mean diagonal."""
    if "spct" not in matrices._cache:
        Ksp = distance_to_kernel(matrices.C)
        Kct = distance_to_kernel(commute_time_distance(matrices))
        matrices._cache["spct"] = (Ksp / np.diag(Ksp).mean(), Kct / np.diag(Kct).mean())
    return matrices._cache["spct"]


def sp_ct_kernel(lam: float, matrices: DerivedMatrices) -> np.ndarray:
    Ksp, Kct = sp_ct_components(matrices)
    return lam * Ksp + (1.0 - lam) * Kct


def elementwise_log(K: np.ndarray, floor: float = LOG_FLOOR) -> tuple[np.ndarray, int]:
    """Natural log after clamping entries at or below ``floor``; returns (log K, clamp count)."""
    low = ~(K > floor)
    count = int(np.count_nonzero(low))
    if count:
        K = np.where(low, floor, K)
    return np.log(K), count


_ADJ = ("Katz", "Comm", "DF")
_LAP = ("For", "Heat", "NHeat", "Abs")
_MARKOV = ("PPR", "MPPR", "HPR")


def build_plain(family: str, value: float, matrices: DerivedMatrices,
                sigmoid_sign: int = DEFAULT_SIGMOID_SIGN) -> np.ndarray:
    if family in _ADJ:
        return kernel_adjacency(family, value, matrices)
    if family in _LAP:
        return kernel_laplacian(family, value, matrices)
    if family in _MARKOV:
        return kernel_markov(family, value, matrices)
    if family in ("RSP", "FE"):
        return rsp_fe(family, value, matrices)
    if family in ("SCT", "SCCT"):
        return sigmoid_ct(family, value, matrices, sign=sigmoid_sign)
    if family == "SP-CT":
        return sp_ct_kernel(value, matrices)
    raise InvalidMeasure(family)


def build_measure(measure: MeasureId | str, x: float, matrices: DerivedMatrices,
                  sigmoid_sign: int = DEFAULT_SIGMOID_SIGN) -> KernelMatrix:
    """Build the symmetric kernel of ``measure`` at grid value ``x``.

    Raises a :class:`MeasureError` subclass when the kernel is singular,
    divergent or not finite for this parameter.
    """
    if isinstance(measure, str):
        measure = MeasureId.parse(measure)
    param = map_param(measure, x, matrices)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonPositiveEntryWarning)
        K = build_plain(measure.family, param.value, matrices, sigmoid_sign)
    if not np.all(np.isfinite(K)):
        raise NonFiniteKernel(f"{measure} is not finite at {param.name}={param.value:g}")
    clamped = 0
    if measure.variant == "log":
        K, clamped = elementwise_log(K)
    K = (K + K.T) / 2
    if not np.all(np.isfinite(K)):
        raise NonFiniteKernel(f"{measure} is not finite at {param.name}={param.value:g}")
    return KernelMatrix(values=K, measure=measure, param=param, clamped=clamped)


def write_matrix(K: np.ndarray, path) -> None:
    np.savetxt(path, np.asarray(K), fmt="%.17g", delimiter=" ")


def read_matrix(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, dtype=float))
