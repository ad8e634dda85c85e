"""Small dense linear-algebra helpers shared by the measure builders."""

from __future__ import annotations

import numpy as np


def spectral_apply(V: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Return ``V @ diag(f) @ V.T``."""
    return (V * f) @ V.T


def expm_scaling_squaring(M: np.ndarray, terms: int = 24) -> np.ndarray:
    """Matrix exponential of a general square matrix by scaling and squaring.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most 1/2, the
    exponential of the scaled matrix is summed as a Taylor series, and the
    result is squared ``s`` times. With 24 terms the truncation error of the
    scaled series is far below double precision.
    """
    M = np.asarray(M, dtype=float)
    norm = np.abs(M).sum(axis=0).max() if M.size else 0.0
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    X = M / (2.0 ** s)
    n = M.shape[0]
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ X / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result
