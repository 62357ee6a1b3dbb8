"""Shared fixtures-free helpers for the test suite.

The cvxpy routes here are the independent oracles: they express the
same objectives through a disciplined convex programming layer with an
interior-point backend, sharing no code with the package solver.
"""

from __future__ import annotations

import numpy as np

from pggm.covariance import CovarianceView
from pggm.solver import SolverConfig

TIGHT = SolverConfig(outer_tol=1e-12, inner_tol=1e-12, max_outer=500,
                     max_inner=5000)


def random_spd(rng, d, jitter=0.5):
    a = rng.standard_normal((d, d))
    m = a @ a.T / d
    return m + jitter * np.eye(d)


def random_view(rng, p, q, n, mode="explicit"):
    z = rng.standard_normal((n, p + q))
    sig = z.T @ z / n
    if mode == "gram":
        return CovarianceView(yy=sig[:p, :p], yx=sig[:p, p:], n=n,
                              gram_factor=z[:, p:].copy())
    return CovarianceView(yy=sig[:p, :p], yx=sig[:p, p:], n=n,
                          xx=sig[p:, p:])


def psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    return v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _solve(prob):
    import cvxpy as cp
    try:
        prob.solve(solver=cp.CLARABEL)
    except (cp.error.SolverError, Exception):
        pass
    if prob.status not in ("optimal", "optimal_inaccurate"):
        prob.solve(solver=cp.SCS, eps=1e-10, max_iters=200000)
    assert prob.status in ("optimal", "optimal_inaccurate"), prob.status
    return prob


def cvx_partial(syy, syx, sxx, lam, rho, family="element"):
    """Reference minimizer of the penalized partial objective."""
    import cvxpy as cp
    p, q = syx.shape
    O = cp.Variable((p, p), symmetric=True)
    R = cp.Variable((p, q))
    c = psd_sqrt(sxx)
    mask = 1.0 - np.eye(p)
    pen_yy = lam * cp.sum(cp.multiply(mask, cp.abs(O)))
    if family == "element":
        pen_yx = rho * cp.sum(cp.abs(R))
    else:
        pen_yx = rho * cp.sum(cp.norm(R, 2, axis=0))
    obj = (-cp.log_det(O) + cp.trace(syy @ O)
           + 2 * cp.sum(cp.multiply(syx, R)) + cp.matrix_frac(R @ c, O)
           + pen_yy + pen_yx)
    prob = _solve(cp.Problem(cp.Minimize(obj)))
    return np.asarray(O.value), np.asarray(R.value), float(prob.value)


def cvx_glasso(sigma, lam):
    """Reference minimizer of the l1 graphical lasso, diagonal unpenalized."""
    import cvxpy as cp
    d = sigma.shape[0]
    O = cp.Variable((d, d), symmetric=True)
    mask = 1.0 - np.eye(d)
    obj = (-cp.log_det(O) + cp.trace(sigma @ O)
           + lam * cp.sum(cp.multiply(mask, cp.abs(O))))
    prob = _solve(cp.Problem(cp.Minimize(obj)))
    return np.asarray(O.value), float(prob.value)


def cvx_lasso(a, b, rho):
    """Reference minimizer of x'ax + 2b'x + rho*|x|_1 with a PSD."""
    import cvxpy as cp
    k = a.shape[0]
    x = cp.Variable(k)
    obj = cp.quad_form(x, cp.psd_wrap(a)) + 2 * b @ x + rho * cp.norm1(x)
    _solve(cp.Problem(cp.Minimize(obj)))
    return np.asarray(x.value)


def fd_gradient(fun, x, eps=1e-6):
    """Central finite differences of a scalar function of a matrix."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy(); xp[idx] += eps
        xm = x.copy(); xm[idx] -= eps
        g[idx] = (fun(xp) - fun(xm)) / (2 * eps)
        it.iternext()
    return g
