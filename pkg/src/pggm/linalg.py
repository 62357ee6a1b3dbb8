"""Dense symmetric linear algebra used throughout the package.

Everything operates on float64 numpy arrays. Positive definiteness is
probed through Cholesky rather than eigenvalues: the solvers treat a
failed factorization as a line-search feasibility signal, so `cholesky`
returns None instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NotPDError(ValueError):
    """A matrix that must be positive definite is not."""


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular Cholesky factor of a positive definite matrix."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def cholesky(m: np.ndarray) -> CholFactor | None:
    """Factor a symmetric matrix, or return None if it is not PD.

    None is a regular value here, not a fault: backtracking line
    searches call this as a feasibility probe and shrink the step on
    failure.
    """
    try:
        lower = scipy.linalg.cholesky(m, lower=True, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        return None
    return CholFactor(lower)


def require_cholesky(m: np.ndarray, what: str = "matrix") -> CholFactor:
    f = cholesky(m)
    if f is None:
        raise NotPDError(f"{what} is not positive definite")
    return f


def logdet(f: CholFactor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(f.lower))))


def solve_spd(f: CholFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve m @ x = rhs given the factor of m."""
    return scipy.linalg.cho_solve((f.lower, True), rhs, check_finite=False)


def spd_inverse(f: CholFactor) -> np.ndarray:
    inv = solve_spd(f, np.eye(f.dim))
    return symmetrize(inv)


def extreme_eigenvalues(m: np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix.

    Only the two extremes are computed (LAPACK tridiagonalization with
    selective extraction), which is what the diagnostics need.
    """
    d = m.shape[0]
    if d == 0:
        raise ValueError("empty matrix has no eigenvalues")
    if d == 1:
        v = float(m[0, 0])
        return v, v
    lo = scipy.linalg.eigh(m, eigvals_only=True, subset_by_index=[0, 0],
                           check_finite=False)
    hi = scipy.linalg.eigh(m, eigvals_only=True, subset_by_index=[d - 1, d - 1],
                           check_finite=False)
    return float(lo[0]), float(hi[0])


def soft_threshold(x, t):
    """Shrink toward zero by t, elementwise. t must be nonnegative."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def group_soft_threshold(m: np.ndarray, t: float) -> np.ndarray:
    """Shrink each column's 2-norm by t, zeroing columns at or below t.

    Surviving columns keep their direction. Zero columns stay zero.
    """
    norms = np.linalg.norm(m, axis=0)
    scale = np.zeros_like(norms)
    keep = norms > t
    scale[keep] = (norms[keep] - t) / norms[keep]
    return m * scale
