"""Estimation-quality metrics and the finite-sample theory diagnostics.

Norm losses treat the estimate as the single p by (p+q) stacked block
[yy | yx] against the true blocks. Support scores count the strict upper
triangle of yy (off-diagonal, each edge once) plus every yx entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceView, materialize_xx
from .linalg import extreme_eigenvalues, require_cholesky, solve_spd, spd_inverse
from .solver import BlockPrecision, PenaltySpec, partial_objective
from .synth import GroundTruth


@dataclass(frozen=True)
class MetricsReport:
    frobenius: float
    spectral: float
    matrix_l1: float
    fscore: float
    precision: float
    recall: float
    runtime: float


def _stacked_diff(theta: BlockPrecision, gt: GroundTruth) -> np.ndarray:
    return np.hstack([theta.yy - gt.omega_yy, theta.yx - gt.omega_yx])


def norm_losses(theta: BlockPrecision, gt: GroundTruth) -> tuple[float, float, float]:
    """(Frobenius, spectral, matrix-l1) of the stacked block error."""
    d = _stacked_diff(theta, gt)
    frob = float(np.linalg.norm(d, "fro"))
    spectral = float(np.linalg.norm(d, 2))
    mat_l1 = float(np.abs(d).sum(axis=0).max())
    return frob, spectral, mat_l1


def block_frobenius(theta: BlockPrecision, gt: GroundTruth) -> tuple[float, float]:
    """Per-block Frobenius errors (yy, yx), for reporting."""
    return (float(np.linalg.norm(theta.yy - gt.omega_yy, "fro")),
            float(np.linalg.norm(theta.yx - gt.omega_yx, "fro")))


def support_of(theta: BlockPrecision, tol: float = 0.0):
    """Boolean masks (yy, yx) of entries strictly above tol in magnitude."""
    return np.abs(theta.yy) > tol, np.abs(theta.yx) > tol


def support_fscore(est, true) -> tuple[float, float, float]:
    """(fscore, precision, recall) of recovered structure.

    est and true are (yy_mask, yx_mask) pairs. yy edges are counted once
    each (strict upper triangle); the diagonal never counts. Empty
    denominators give zeros by convention.
    """
    est_yy, est_yx = est
    true_yy, true_yx = true
    p = est_yy.shape[0]
    iu = np.triu_indices(p, k=1)
    e = np.concatenate([np.asarray(est_yy)[iu].ravel(), np.asarray(est_yx).ravel()])
    t = np.concatenate([np.asarray(true_yy)[iu].ravel(), np.asarray(true_yx).ravel()])
    tp = float(np.sum(e & t))
    fp = float(np.sum(e & ~t))
    fn = float(np.sum(~e & t))
    prec = tp / (tp + fp) if tp + fp > 0 else 0.0
    rec = tp / (tp + fn) if tp + fn > 0 else 0.0
    f = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    return f, prec, rec


def links_above(omega_yy: np.ndarray, mu: float):
    """Upper-triangle entries with |weight| >= mu as (i, j, weight),
    sorted by |weight| descending, ties by (i, j)."""
    p = omega_yy.shape[0]
    out = []
    for i in range(p):
        for j in range(i + 1, p):
            w = float(omega_yy[i, j])
            if abs(w) >= mu:
                out.append((i, j, w))
    out.sort(key=lambda e: (-abs(e[2]), e[0], e[1]))
    return out


def topk_link_precision(links, labels, k: int) -> float:
    """Fraction of the strongest min(k, len) links joining same-label nodes."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not links:
        return 0.0
    head = links[:min(k, len(links))]
    same = sum(1 for i, j, _ in head if labels[i] == labels[j])
    return same / len(head)


def test_objective(cv_test: CovarianceView, theta: BlockPrecision) -> float:
    """Held-out value of the smooth objective."""
    return partial_objective(cv_test, theta)


@dataclass(frozen=True)
class TheoryDiagnostics:
    gamma_n: float    # max-norm of the effective noise blocks
    a_inf: float
    b_inf: float
    alpha: float      # cone opening 3 max(lam, rho) / min(lam, rho)
    rho_minus: float
    rho_plus: float
    beta0: float      # restricted strong convexity lower bound
    r0: float         # radius where that bound is valid
    gamma0: float     # population constant in the gamma_n rate
    s_size: int       # |S|: true nonzeros of yy (diagonal included) + yx
    c0: float         # max(lam, rho) / gamma_n, clamped to >= 2
    delta_n: float    # 1.5 c0 gamma_n sqrt(|S|) / beta0


def theory_diagnostics(gt: GroundTruth, cv: CovarianceView,
                       pen: PenaltySpec) -> TheoryDiagnostics:
    """Evaluate the error-bound constants at the truth for one sample."""
    f = require_cholesky(gt.omega_yy, "true yy block")
    k = solve_spd(f, gt.omega_yx)  # (omega_yy)^-1 omega_yx
    dxx = materialize_xx(cv) - gt.sigma_xx
    a_n = cv.yy - gt.sigma_yy - k @ dxx @ k.T
    b_n = 2.0 * (cv.yx - gt.sigma_yx + k @ dxx)
    a_inf = float(np.abs(a_n).max())
    b_inf = float(np.abs(b_n).max()) if b_n.size else 0.0
    gamma_n = max(a_inf, b_inf)

    lo_yy, hi_yy = extreme_eigenvalues(gt.omega_yy)
    lo_xx, hi_xx = extreme_eigenvalues(gt.sigma_xx)
    cross = gt.omega_yx @ gt.sigma_xx @ gt.omega_yx.T
    cross_max = extreme_eigenvalues(cross)[1] if cross.size else 0.0

    rho_minus = 0.5 * min(1.0 / hi_yy, lo_xx)
    rho_plus = 1.5 * hi_xx
    curve = 2.0 if cross_max <= 0 else min(2.0, 3.0 * lo_yy / (8.0 * cross_max))
    beta0 = rho_minus / (40.0 * hi_yy) * curve
    r0 = min(0.5 * lo_yy, 0.13 * np.sqrt(cross_max / rho_plus))

    w = spd_inverse(f)
    inner = w @ cross @ w
    gamma0 = 16.0 * (float(np.diag(gt.sigma).max()) + float(np.diag(inner).max()))

    supp_yy = gt.support_yy.copy()
    np.fill_diagonal(supp_yy, True)
    s_size = int(supp_yy.sum() + gt.support_yx.sum())

    alpha = 3.0 * max(pen.lam, pen.rho) / min(pen.lam, pen.rho) \
        if min(pen.lam, pen.rho) > 0 else np.inf
    if gamma_n > 0:
        c0 = max(2.0, max(pen.lam, pen.rho) / gamma_n)
        delta_n = 1.5 * c0 * gamma_n * np.sqrt(s_size) / beta0
    else:
        c0 = 2.0
        delta_n = 0.0
    return TheoryDiagnostics(gamma_n=gamma_n, a_inf=a_inf, b_inf=b_inf,
                             alpha=float(alpha), rho_minus=rho_minus,
                             rho_plus=rho_plus, beta0=beta0, r0=float(r0),
                             gamma0=gamma0, s_size=s_size, c0=float(c0),
                             delta_n=float(delta_n))
