"""Reference estimators the main solver is compared against.

full GGM     l1-penalized precision of the whole (p+q)-vector, obtained
             by running the block solver on a q = 0 view of the joint
             moment matrix (the partial objective then IS the usual
             log-det objective).
marginal GGM the same on the p-vector alone, ignoring x.
NSLasso      per-node neighborhood selection: each y_i regressed on all
             remaining variables with an l1 penalty, supports merged by
             the OR rule (AND optional).
univariate   the p = 1 special case of the main estimator; with the
             noise precision clamped to 1 it reduces exactly to a Lasso
             in covariance form, which anchors the equivalence tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceView, Dataset, joint_view, marginal_view
from .linalg import require_cholesky, soft_threshold, solve_spd, symmetrize
from .solver import (BlockPrecision, FitResult, PenaltySpec, SolverConfig,
                     fit, solve_yx_only)


@dataclass
class FullPrecision:
    """Joint precision estimate from a plain GGM fit."""

    omega: np.ndarray
    result: FitResult


def fit_full_ggm(cv: CovarianceView, lam: float,
                 cfg: SolverConfig | None = None) -> FullPrecision:
    """l1-penalized log-det fit of the whole (p+q)-dim precision.

    Materializes the joint moment matrix, so the view should be explicit
    (or small enough that q by q is acceptable).
    """
    res = fit(joint_view(cv), PenaltySpec(lam=lam, rho=0.0), cfg)
    return FullPrecision(omega=res.theta.yy, result=res)


def fit_marginal_ggm(cv: CovarianceView, lam: float,
                     cfg: SolverConfig | None = None) -> FullPrecision:
    """Same penalized log-det fit on the yy moments alone."""
    res = fit(marginal_view(cv), PenaltySpec(lam=lam, rho=0.0), cfg)
    return FullPrecision(omega=res.theta.yy, result=res)


def lasso_cd(a: np.ndarray, b: np.ndarray, rho: float,
             tol: float = 1e-8, max_iter: int = 1000,
             x0: np.ndarray | None = None) -> np.ndarray:
    """Minimize x'ax + 2x'b + rho|x|_1 by cyclic coordinate descent.

    a is a PSD Gram/covariance matrix. The product a@x is maintained
    under single-coordinate updates, so a sweep with no support change
    costs O(m) plus O(m) per moved coordinate. Stops when no coordinate
    moves more than tol in a sweep.
    """
    m = a.shape[0]
    x = np.zeros(m) if x0 is None else x0.astype(np.float64).copy()
    ax = a @ x
    for _ in range(max_iter):
        biggest = 0.0
        for k in range(m):
            akk = a[k, k]
            if akk <= 0.0:
                continue
            r = ax[k] - akk * x[k] + b[k]
            new = soft_threshold(-r, rho / 2.0) / akk
            d = new - x[k]
            if d != 0.0:
                ax += a[:, k] * d
                x[k] = new
                biggest = max(biggest, abs(d))
        if biggest <= tol:
            break
    return x


@dataclass
class NeighborhoodFit:
    """Per-node Lasso rows over the joint index (self position forced 0)
    and the merged supports."""

    coefs: np.ndarray        # p by (p+q)
    support_yy: np.ndarray   # p by p bool, zero diagonal
    support_yx: np.ndarray   # p by q bool


def fit_nslasso(d: Dataset, rho: float, tol: float = 1e-8,
                max_iter: int = 1000, and_rule: bool = False) -> NeighborhoodFit:
    """Neighborhood selection: Lasso of each y_i on (y_-i, x).

    Symmetrizes the yy support with the OR rule by default (an edge is
    kept when either endpoint selects it); and_rule keeps the
    intersection instead.
    """
    z = np.hstack([d.y, d.x])
    s = symmetrize(z.T @ z / d.n)
    p, q = d.p, d.q
    coefs = np.zeros((p, p + q))
    for i in range(p):
        keep = np.arange(p + q) != i
        a = s[np.ix_(keep, keep)]
        b = s[keep, i]
        coefs[i, keep] = lasso_cd(a, b, rho, tol=tol, max_iter=max_iter)
    nz_yy = coefs[:, :p] != 0.0
    support_yy = (nz_yy & nz_yy.T) if and_rule else (nz_yy | nz_yy.T)
    np.fill_diagonal(support_yy, False)
    return NeighborhoodFit(coefs=coefs, support_yy=support_yy,
                           support_yx=coefs[:, p:] != 0.0)


@dataclass
class UnivariateFit:
    omega: float          # scalar noise precision
    theta: np.ndarray     # length-q cross block row


def fit_univariate(cv: CovarianceView, rho: float,
                   cfg: SolverConfig | None = None,
                   fix_omega: bool = False) -> UnivariateFit:
    """The p = 1 estimator. With fix_omega the scalar yy entry is
    clamped to 1 and only the penalized quadratic in theta is solved."""
    if cv.p != 1:
        raise ValueError("univariate fit needs exactly one y variable")
    pen = PenaltySpec(lam=0.0, rho=rho)
    if fix_omega:
        yx, _ = solve_yx_only(cv, np.array([[1.0]]), pen, cfg)
        return UnivariateFit(omega=1.0, theta=yx[0])
    res = fit(cv, pen, cfg)
    return UnivariateFit(omega=float(res.theta.yy[0, 0]), theta=res.theta.yx[0])


def to_regression(theta: BlockPrecision) -> tuple[np.ndarray, np.ndarray]:
    """Regression view: coefficients gamma = -yy^-1 yx of x predicting y,
    and the residual precision (= yy)."""
    f = require_cholesky(theta.yy, "yy block")
    return -solve_spd(f, theta.yx), theta.yy.copy()


def from_regression(gamma: np.ndarray, noise_precision: np.ndarray) -> BlockPrecision:
    """Inverse of to_regression."""
    return BlockPrecision(yy=noise_precision.copy(),
                          yx=-noise_precision @ gamma)
