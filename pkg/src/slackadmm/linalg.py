"""Dense linear algebra used by the ADMM x-updates.

Matrices and vectors are plain ``numpy.ndarray`` objects. The only
non-trivial piece is the SPD factorization, which wraps LAPACK's Cholesky
(``potrf``/``potrs`` via scipy) and adds an explicit pivot tolerance so that
singular x-update matrices are reported instead of silently producing a
garbage factor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg

PIVOT_TOL = 1e-12


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Cholesky broke down: the matrix is not numerically positive definite."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.array(a, dtype=float, ndmin=2, copy=True)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_vector(v, name: str = "vector", allow_inf: bool = False) -> np.ndarray:
    x = np.array(v, dtype=float, copy=True).reshape(-1)
    if np.any(np.isnan(x)):
        raise ValueError(f"{name} has NaN entries")
    if not allow_inf and not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has infinite entries")
    return x


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def gram_plus(Q: np.ndarray, A: np.ndarray, rho: float) -> np.ndarray:
    """Return ``Q + rho * A.T @ A``, symmetrized."""
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise DimensionError(f"Q must be square, got {Q.shape}")
    if A.shape[1] != n:
        raise DimensionError(f"A has {A.shape[1]} columns, Q has {n} rows")
    if rho <= 0:
        raise ValueError("rho must be positive")
    M = Q + rho * (A.T @ A)
    # Q is symmetric up to roundoff; force exact symmetry
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class SpdFactorization:
    """Cholesky factor of a symmetric positive definite matrix."""

    dimension: int
    factor: np.ndarray  # lower-triangular L with M = L L^T

    def solve(self, b: np.ndarray) -> np.ndarray:
        return solve_with(self, b)


_LAPACK_MINOR = re.compile(r"(\d+)-th leading minor")


def factorize_spd(M: np.ndarray) -> SpdFactorization:
    """Factorize a symmetric matrix, raising :class:`NotPositiveDefinite` on failure.

    A pivot counts as singular when its square falls below ``PIVOT_TOL``
    times the largest diagonal entry of ``M``.
    """
    n = M.shape[0]
    if M.ndim != 2 or M.shape != (n, n):
        raise DimensionError(f"expected a square matrix, got {M.shape}")
    if n == 0:
        return SpdFactorization(0, np.zeros((0, 0)))
    scale = float(np.max(np.abs(np.diag(M))))
    if scale == 0.0:
        raise NotPositiveDefinite(0)
    try:
        L = scipy.linalg.cholesky(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as err:
        found = _LAPACK_MINOR.search(str(err))
        pivot = int(found.group(1)) - 1 if found else -1
        raise NotPositiveDefinite(pivot) from err
    pivots = np.diag(L) ** 2
    bad = np.flatnonzero(pivots <= PIVOT_TOL * scale)
    if bad.size:
        raise NotPositiveDefinite(int(bad[0]))
    return SpdFactorization(n, L)


def solve_with(f: SpdFactorization, b: np.ndarray) -> np.ndarray:
    if b.shape[0] != f.dimension:
        raise DimensionError(f"rhs has length {b.shape[0]}, factorization has {f.dimension}")
    if f.dimension == 0:
        return np.zeros(0)
    return scipy.linalg.cho_solve((f.factor, True), b, check_finite=False)
