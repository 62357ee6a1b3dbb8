"""Penalized block estimation of the conditional precision blocks.

The estimator minimizes, over the yy (p by p, PD) and yx (p by q) blocks,

    -logdet(yy) + <Syy, yy> + 2 <Syx, yx> + tr(Sxx yx' yy^-1 yx) + R(yy, yx)

where the S* are empirical second-moment blocks and R puts an l1 weight
lam on the off-diagonal of yy and a weight rho on yx (entrywise, or on
column 2-norms for the group variant). The smooth part is jointly convex,
so block descent with proximal-gradient passes converges to the global
minimum; each pass backtracks a quadratic upper bound, which also keeps
yy inside the PD cone (a failed Cholesky just shrinks the step).

All consumers of the q-by-q moment block go through the covariance view,
so a Gram-form view runs the whole solver without ever forming q by q.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .covariance import (CovarianceView, full_sigma, materialize_xx,
                         xx_right_multiply)
from .linalg import (CholFactor, NotPDError, cholesky, group_soft_threshold,
                     logdet, require_cholesky, soft_threshold, solve_spd,
                     spd_inverse, symmetrize)

PENALTY_FAMILIES = ("element", "column")


class StepUnderflowError(RuntimeError):
    """Backtracking shrank the step below min_step."""


class NonFiniteError(FloatingPointError):
    """An objective or gradient stopped being finite."""


@dataclass
class BlockPrecision:
    """The two estimated blocks: yy (p by p, symmetric PD) and yx (p by q)."""

    yy: np.ndarray
    yx: np.ndarray

    @property
    def p(self) -> int:
        return self.yy.shape[0]

    @property
    def q(self) -> int:
        return self.yx.shape[1]

    def copy(self) -> "BlockPrecision":
        return BlockPrecision(self.yy.copy(), self.yx.copy())


@dataclass(frozen=True)
class PenaltySpec:
    """l1 weights: lam on off-diagonal yy entries, rho on the yx block.

    family "element" penalizes yx entrywise; "column" penalizes the sum
    of yx column 2-norms, dropping whole predictors. The yy diagonal is
    never penalized.
    """

    lam: float
    rho: float
    family: str = "element"

    def __post_init__(self):
        if self.lam < 0 or self.rho < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.family not in PENALTY_FAMILIES:
            raise ValueError(f"family must be one of {PENALTY_FAMILIES}")


@dataclass(frozen=True)
class SolverConfig:
    outer_tol: float = 1e-6
    max_outer: int = 100
    inner_tol: float = 1e-8
    max_inner: int = 200
    ls_shrink: float = 0.5
    ls_grow: float = 1.1
    min_step: float = 1e-14
    init_diag_eps: float = 1e-8
    use_bb: bool = False


@dataclass
class FitResult:
    theta: BlockPrecision
    objective_trace: list[float]
    outer_iters: int
    inner_iters: int
    wall_time: float
    termination: str  # "converged" or "max_iters"


def _offdiag_l1(m: np.ndarray) -> float:
    return float(np.abs(m).sum() - np.abs(np.diag(m)).sum())


def _yx_reg(yx: np.ndarray, family: str) -> float:
    if family == "element":
        return float(np.abs(yx).sum())
    return float(np.linalg.norm(yx, axis=0).sum())


def penalty_value(pen: PenaltySpec, theta: BlockPrecision) -> float:
    return pen.lam * _offdiag_l1(theta.yy) + pen.rho * _yx_reg(theta.yx, pen.family)


def partial_objective(cv: CovarianceView, theta: BlockPrecision) -> float:
    """The smooth objective at (yy, yx). Raises NotPDError if yy is not PD."""
    f = require_cholesky(theta.yy, "yy block")
    val = -logdet(f) + float(np.sum(cv.yy * theta.yy))
    if cv.q > 0:
        t = solve_spd(f, theta.yx)
        u = xx_right_multiply(cv, t)
        val += 2.0 * float(np.sum(cv.yx * theta.yx)) + float(np.sum(u * theta.yx))
    return val


def objective(cv: CovarianceView, theta: BlockPrecision, pen: PenaltySpec) -> float:
    """Penalized objective: smooth part plus R."""
    return partial_objective(cv, theta) + penalty_value(pen, theta)


def full_objective(cv: CovarianceView, omega: np.ndarray) -> float:
    """-logdet(omega) + <S, omega> over the whole (p+q)-dim matrix.

    Materializes the joint moment matrix, so meant for explicit views or
    small problems.
    """
    s = full_sigma(cv)
    f = require_cholesky(omega, "omega")
    return -logdet(f) + float(np.sum(s * omega))


def decomposition_residual(cv: CovarianceView, omega: np.ndarray) -> float:
    """|full objective - (partial objective + marginal-x remainder)|.

    The full log-det objective splits exactly into the partial objective
    of (yy, yx) plus the same form in the Schur complement
    xx - yx' yy^-1 yx against the xx moments; the residual is a float
    rounding check.
    """
    p = cv.p
    oyy, oyx, oxx = omega[:p, :p], omega[:p, p:], omega[p:, p:]
    lfull = full_objective(cv, omega)
    lpa = partial_objective(cv, BlockPrecision(oyy, oyx))
    f = require_cholesky(oyy, "yy block")
    schur = symmetrize(oxx - oyx.T @ solve_spd(f, oyx))
    fs = require_cholesky(schur, "xx Schur complement")
    h = -logdet(fs) + float(np.sum(materialize_xx(cv) * schur))
    return abs(lfull - (lpa + h))


# ---------------------------------------------------------------------------
# smooth-part evaluation with gradient reuse

def _yy_eval(cv, yy, yx):
    """Value of the smooth part as a function of yy (yx fixed).

    Returns (value, (chol, t, u)) or None when yy is not PD; t = yy^-1 yx
    and u = t @ xx are what the gradient needs.
    """
    f = cholesky(yy)
    if f is None:
        return None
    if yx.shape[1] > 0:
        t = solve_spd(f, yx)
        u = xx_right_multiply(cv, t)
        quad = float(np.sum(u * yx))
    else:
        t = yx
        u = yx
        quad = 0.0
    val = -logdet(f) + float(np.sum(cv.yy * yy)) + quad
    return val, (f, t, u)


def _yy_grad(cv, aux):
    f, t, u = aux
    w = spd_inverse(f)
    g = -w + cv.yy
    if t.shape[1] > 0:
        g = g - u @ t.T
    return symmetrize(g)


def _yx_eval(cv, f: CholFactor, yx):
    """Smooth value and gradient as a function of yx (yy fixed via its factor)."""
    t = solve_spd(f, yx)
    u = xx_right_multiply(cv, t)
    val = float(np.sum(u * yx)) + 2.0 * float(np.sum(cv.yx * yx))
    grad = 2.0 * u + 2.0 * cv.yx
    return val, grad


def grad_yy(cv: CovarianceView, theta: BlockPrecision) -> np.ndarray:
    """Gradient of the smooth part in the yy block:
    -yy^-1 + Syy - yy^-1 yx Sxx yx' yy^-1."""
    ev = _yy_eval(cv, theta.yy, theta.yx)
    if ev is None:
        raise NotPDError("yy block is not positive definite")
    return _yy_grad(cv, ev[1])


def grad_yx(cv: CovarianceView, theta: BlockPrecision) -> np.ndarray:
    """Gradient of the smooth part in the yx block:
    2 yy^-1 yx Sxx + 2 Syx."""
    f = require_cholesky(theta.yy, "yy block")
    return _yx_eval(cv, f, theta.yx)[1]


# ---------------------------------------------------------------------------
# proximal maps and backtracking

def _prox_yy_map(m, t_lam):
    out = soft_threshold(m, t_lam)
    np.fill_diagonal(out, np.diag(m))
    return symmetrize(out)


def _prox_yx_map(m, t_rho, family):
    if family == "element":
        return soft_threshold(m, t_rho)
    return group_soft_threshold(m, t_rho)


def _backtrack_yy(cv, yy, yx, fval, grad, step, lam, cfg):
    """Shrink step until the prox candidate is PD and satisfies the
    quadratic sufficient-decrease bound."""
    slack = 1e-12 * (1.0 + abs(fval))
    while True:
        cand = _prox_yy_map(yy - step * grad, step * lam)
        ev = _yy_eval(cv, cand, yx)
        if ev is not None:
            f_c, aux_c = ev
            delta = cand - yy
            bound = fval + float(np.sum(grad * delta)) \
                + float(np.sum(delta * delta)) / (2.0 * step)
            if f_c <= bound + slack:
                return cand, f_c, aux_c, step
        step *= cfg.ls_shrink
        if step < cfg.min_step:
            raise StepUnderflowError("yy line search underflowed min_step")


def _backtrack_yx(cv, f, yx, gval, grad, step, rho, family, cfg):
    slack = 1e-12 * (1.0 + abs(gval))
    while True:
        cand = _prox_yx_map(yx - step * grad, step * rho, family)
        g_c, grad_c = _yx_eval(cv, f, cand)
        delta = cand - yx
        bound = gval + float(np.sum(grad * delta)) \
            + float(np.sum(delta * delta)) / (2.0 * step)
        if g_c <= bound + slack:
            return cand, g_c, grad_c, step
        step *= cfg.ls_shrink
        if step < cfg.min_step:
            raise StepUnderflowError("yx line search underflowed min_step")


def prox_step_yy(cv, yy, yx, pen: PenaltySpec, step: float,
                 cfg: SolverConfig | None = None):
    """One backtracked proximal gradient step on the yy block.

    Returns (new yy, accepted step). Raises NotPDError if yy itself is
    infeasible, StepUnderflowError if no acceptable step remains above
    min_step.
    """
    cfg = cfg or SolverConfig()
    ev = _yy_eval(cv, yy, yx)
    if ev is None:
        raise NotPDError("yy block is not positive definite")
    fval, aux = ev
    grad = _yy_grad(cv, aux)
    cand, _, _, step = _backtrack_yy(cv, yy, yx, fval, grad, step, pen.lam, cfg)
    return cand, step


def prox_step_yx(cv, yy, yx, pen: PenaltySpec, step: float,
                 cfg: SolverConfig | None = None):
    """One backtracked proximal gradient step on the yx block."""
    cfg = cfg or SolverConfig()
    f = require_cholesky(yy, "yy block")
    gval, grad = _yx_eval(cv, f, yx)
    cand, _, _, step = _backtrack_yx(cv, f, yx, gval, grad, step,
                                     pen.rho, pen.family, cfg)
    return cand, step


def _bb_step(dx, dg, fallback, cfg):
    sy = float(np.sum(dx * dg))
    if sy <= 0.0:
        return fallback
    step = float(np.sum(dx * dx)) / sy
    return min(max(step, cfg.min_step), 1e8)


# ---------------------------------------------------------------------------
# inner passes

def _inner_yy(cv, yy, yx, pen, cfg, step):
    ev = _yy_eval(cv, yy, yx)
    if ev is None:
        raise NotPDError("yy block is not positive definite")
    fval, aux = ev
    comp = fval + pen.lam * _offdiag_l1(yy)
    grad = _yy_grad(cv, aux)
    iters = 0
    prev = None
    for _ in range(cfg.max_inner):
        if not np.isfinite(grad).all():
            raise NonFiniteError("yy gradient is not finite")
        if cfg.use_bb and prev is not None:
            step = _bb_step(yy - prev[0], grad - prev[1], step, cfg)
        cand, f_c, aux_c, step = _backtrack_yy(cv, yy, yx, fval, grad,
                                               step, pen.lam, cfg)
        iters += 1
        comp_c = f_c + pen.lam * _offdiag_l1(cand)
        done = abs(comp - comp_c) <= cfg.inner_tol * (1.0 + abs(comp))
        if cfg.use_bb:
            prev = (yy, grad)
        yy, fval, aux, comp = cand, f_c, aux_c, comp_c
        if done:
            break
        grad = _yy_grad(cv, aux)
        step *= cfg.ls_grow
    return yy, fval, aux, step, iters


def _inner_yx(cv, f, yx, pen, cfg, step):
    gval, grad = _yx_eval(cv, f, yx)
    comp = gval + pen.rho * _yx_reg(yx, pen.family)
    iters = 0
    prev = None
    for _ in range(cfg.max_inner):
        if not np.isfinite(grad).all():
            raise NonFiniteError("yx gradient is not finite")
        if cfg.use_bb and prev is not None:
            step = _bb_step(yx - prev[0], grad - prev[1], step, cfg)
        cand, g_c, grad_c, step = _backtrack_yx(cv, f, yx, gval, grad, step,
                                                pen.rho, pen.family, cfg)
        iters += 1
        comp_c = g_c + pen.rho * _yx_reg(cand, pen.family)
        done = abs(comp - comp_c) <= cfg.inner_tol * (1.0 + abs(comp))
        if cfg.use_bb:
            prev = (yx, grad)
        yx, gval, grad, comp = cand, g_c, grad_c, comp_c
        if done:
            break
        step *= cfg.ls_grow
    return yx, gval, step, iters


def default_init(cv: CovarianceView) -> BlockPrecision:
    """Diagonal yy from inverse marginal moments, zero yx."""
    yy = np.diag(1.0 / (np.diag(cv.yy) + SolverConfig().init_diag_eps))
    return BlockPrecision(yy, np.zeros((cv.p, cv.q)))


def fit(cv: CovarianceView, pen: PenaltySpec,
        cfg: SolverConfig | None = None,
        init: BlockPrecision | None = None) -> FitResult:
    """Estimate the precision blocks by block proximal descent.

    Alternates a proximal-gradient pass on yy (yx fixed) and one on yx
    (yy fixed) until the relative decrease of the penalized objective
    over an outer cycle falls below outer_tol. The objective trace is
    non-increasing by construction of the line searches.

    Raises NotPDError for an infeasible init, NonFiniteError if the
    objective or a gradient stops being finite, StepUnderflowError if a
    line search collapses.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    theta = init.copy() if init is not None else default_init(cv)
    q = cv.q

    obj = objective(cv, theta, pen)
    if not np.isfinite(obj):
        raise NonFiniteError("objective is not finite at the init")
    trace = [obj]
    step_yy = 1.0
    step_yx = 1.0
    inner_total = 0
    outer = 0
    termination = "max_iters"
    for outer in range(1, cfg.max_outer + 1):
        theta.yy, fval, aux, step_yy, it_yy = _inner_yy(
            cv, theta.yy, theta.yx, pen, cfg, step_yy)
        inner_total += it_yy
        if q > 0:
            f, _, u = aux
            # -logdet + <Syy, yy>, reused while only yx moves
            ld_part = fval - float(np.sum(u * theta.yx))
            theta.yx, gval, step_yx, it_yx = _inner_yx(
                cv, f, theta.yx, pen, cfg, step_yx)
            inner_total += it_yx
            smooth = ld_part + gval
        else:
            smooth = fval
        obj_new = smooth + penalty_value(pen, theta)
        if not np.isfinite(obj_new):
            raise NonFiniteError("objective is not finite")
        trace.append(obj_new)
        if abs(obj - obj_new) <= cfg.outer_tol * (1.0 + abs(obj)):
            termination = "converged"
            break
        obj = obj_new
    return FitResult(theta=theta, objective_trace=trace, outer_iters=outer,
                     inner_iters=inner_total,
                     wall_time=time.perf_counter() - t0,
                     termination=termination)


def solve_yx_only(cv: CovarianceView, yy: np.ndarray, pen: PenaltySpec,
                  cfg: SolverConfig | None = None,
                  yx0: np.ndarray | None = None):
    """Minimize over yx alone with yy held fixed. Returns (yx, inner iters).

    Used by the fixed-noise univariate estimator, where the problem is
    exactly an l1-penalized quadratic.
    """
    cfg = cfg or SolverConfig()
    f = require_cholesky(yy, "yy block")
    yx = np.zeros((cv.p, cv.q)) if yx0 is None else yx0.copy()
    total = 0
    step = 1.0
    # repeat passes until a pass makes no progress, so max_inner caps a
    # pass rather than the whole solve
    for _ in range(cfg.max_outer):
        yx, gval, step, iters = _inner_yx(cv, f, yx, pen, cfg, step)
        total += iters
        if iters < cfg.max_inner:
            break
    return yx, total


def kkt_residuals(cv: CovarianceView, theta: BlockPrecision,
                  pen: PenaltySpec) -> tuple[float, float]:
    """Max stationarity violation per block at (yy, yx).

    Zero coordinates must have the gradient inside the penalty interval,
    nonzero ones must cancel it exactly; column-family yx uses the group
    form of the same conditions.
    """
    gy = grad_yy(cv, theta)
    res_yy = 0.0
    p = theta.p
    for i in range(p):
        for j in range(p):
            if i == j:
                res_yy = max(res_yy, abs(gy[i, i]))
            elif theta.yy[i, j] != 0.0:
                res_yy = max(res_yy, abs(gy[i, j] + pen.lam * np.sign(theta.yy[i, j])))
            else:
                res_yy = max(res_yy, max(0.0, abs(gy[i, j]) - pen.lam))
    if theta.q == 0:
        return res_yy, 0.0
    gx = grad_yx(cv, theta)
    res_yx = 0.0
    if pen.family == "element":
        nz = theta.yx != 0.0
        if nz.any():
            res_yx = float(np.max(np.abs(gx[nz] + pen.rho * np.sign(theta.yx[nz]))))
        if (~nz).any():
            res_yx = max(res_yx, float(np.max(np.maximum(
                np.abs(gx[~nz]) - pen.rho, 0.0))))
    else:
        for j in range(theta.q):
            col = theta.yx[:, j]
            nrm = np.linalg.norm(col)
            if nrm > 0:
                res_yx = max(res_yx, float(np.linalg.norm(
                    gx[:, j] + pen.rho * col / nrm)))
            else:
                res_yx = max(res_yx, max(0.0, float(np.linalg.norm(gx[:, j])) - pen.rho))
    return res_yy, res_yx
