"""Dense SPD factorization, solves, log-determinants and Gaussian draws.

Thin wrappers over LAPACK ``potrf``/``potrs``/``potri``: plain Cholesky, no
pivoting. A failed factorization reports the zero-based pivot index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import DimensionMismatch, NotPositiveDefinite


@dataclass(frozen=True)
class SpdFactor:
    L: np.ndarray

    @property
    def N(self):
        return self.L.shape[0]


def spd_factor(M) -> SpdFactor:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] == 0:
        return SpdFactor(np.zeros((0, 0)))
    if not np.all(np.isfinite(M)):
        raise NotPositiveDefinite(0, "matrix has non-finite entries")
    L, info = lapack.dpotrf(M, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:  # pragma: no cover - argument error inside LAPACK
        raise ValueError(f"dpotrf argument {-info} invalid")
    return SpdFactor(L)


def factor_solve(F: SpdFactor, B):
    """Solve (L L^T) X = B. ``B`` may be a vector or an N x k matrix."""
    B = np.asarray(B, dtype=float)
    if B.shape[0] != F.N:
        raise DimensionMismatch(f"right-hand side has {B.shape[0]} rows, factor is {F.N}")
    if B.size == 0:
        return np.zeros(B.shape)
    X, info = lapack.dpotrs(F.L, B, lower=1)
    if info != 0:  # pragma: no cover
        raise ValueError(f"dpotrs failed with info={info}")
    return X


def factor_inverse(F: SpdFactor, full=True):
    """Symmetric inverse from the factor; ``full=False`` leaves only the lower triangle valid."""
    if F.N == 0:
        return np.zeros((0, 0))
    Minv, info = lapack.dpotri(F.L, lower=1)
    if info != 0:
        raise NotPositiveDefinite(max(info - 1, 0))
    if not full:
        return Minv
    lower = np.tril(Minv)
    return lower + np.tril(Minv, -1).T


def log_det(F: SpdFactor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(F.L))))


def sample_mvn(F: SpdFactor, z):
    """Map unit normals ``z`` (length N, or N x T) to N(0, L L^T) draws."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != F.N:
        raise DimensionMismatch(f"need {F.N} normals, got {z.shape[0]}")
    return F.L @ z


def factor_with_retry(M, jitter):
    """Factor ``M``; on failure retry once with the diagonal jitter raised tenfold.

    Returns ``(factor, jitter_added)`` where ``jitter_added`` is the extra
    diagonal actually used (0 when the first attempt succeeded).
    """
    try:
        return spd_factor(M), 0.0
    except NotPositiveDefinite:
        bump = 9.0 * jitter if jitter > 0 else 1e-10 * max(float(np.mean(np.diag(M))), 1e-300)
        M = M + bump * np.eye(M.shape[0])
        return spd_factor(M), bump
