"""Penalty-weight selection over a (lam, rho) grid.

Cells are fitted column by column (fixed rho, lam descending) with warm
starts along the lam path. Scoring is either the held-out smooth
objective on a validation view or BIC on the training view. Failed
cells are recorded and skipped; ties prefer the larger (lam, rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import NeighborhoodFit, fit_nslasso
from .covariance import CovarianceView, Dataset, joint_view, marginal_view
from .linalg import NotPDError, symmetrize
from .solver import (BlockPrecision, FitResult, NonFiniteError, PenaltySpec,
                     SolverConfig, StepUnderflowError, fit, partial_objective)

FALLBACK_WEIGHT = 1e-3
SELECTION_METHODS = ("validation", "bic")
SOLVER_ERRORS = (NotPDError, StepUnderflowError, NonFiniteError)


def lambda_max_heuristic(cv: CovarianceView) -> tuple[float, float]:
    """Smallest weights that keep the default init stationary.

    At the diagonal init with a zero yx block the yy gradient has
    off-diagonal part offdiag(Syy) and the yx gradient is 2 Syx, so any
    (lam, rho) at or above these maxima leaves yy diagonal and yx zero.
    Zero maxima (e.g. uncorrelated columns) fall back to a small fixed
    weight so grids stay usable.
    """
    offdiag = np.abs(cv.yy).copy()
    np.fill_diagonal(offdiag, 0.0)
    lam_max = float(offdiag.max()) if offdiag.size else 0.0
    rho_max = 2.0 * float(np.abs(cv.yx).max()) if cv.yx.size else 0.0
    if lam_max <= 0.0:
        lam_max = FALLBACK_WEIGHT
    if rho_max <= 0.0:
        rho_max = FALLBACK_WEIGHT
    return lam_max, rho_max


def log_grid(top: float, points: int = 10, span: float = 100.0) -> tuple[float, ...]:
    """points log-spaced values from top down to top/span."""
    if top <= 0 or points < 1 or span <= 1:
        raise ValueError("need top > 0, points >= 1, span > 1")
    if points == 1:
        return (float(top),)
    return tuple(float(v) for v in np.geomspace(top, top / span, points))


@dataclass(frozen=True)
class GridSpec:
    lambdas: tuple[float, ...]
    rhos: tuple[float, ...]
    method: str = "validation"
    family: str = "element"

    def __post_init__(self):
        if not self.lambdas or not self.rhos:
            raise ValueError("grids must be nonempty")
        if any(v < 0 for v in self.lambdas) or any(v < 0 for v in self.rhos):
            raise ValueError("penalty weights must be nonnegative")
        if self.method not in SELECTION_METHODS:
            raise ValueError(f"method must be one of {SELECTION_METHODS}")
        object.__setattr__(self, "lambdas",
                           tuple(sorted(set(self.lambdas), reverse=True)))
        object.__setattr__(self, "rhos",
                           tuple(sorted(set(self.rhos), reverse=True)))


def default_grid(cv: CovarianceView, method: str = "validation",
                 family: str = "element", points: int = 10,
                 span: float = 100.0) -> GridSpec:
    lam_max, rho_max = lambda_max_heuristic(cv)
    return GridSpec(lambdas=log_grid(lam_max, points, span),
                    rhos=log_grid(rho_max, points, span),
                    method=method, family=family)


def degrees_of_freedom(theta: BlockPrecision) -> int:
    """Free parameters of the sparsity pattern: yy upper off-diagonal
    nonzeros, the p diagonal entries, and yx nonzeros."""
    p = theta.p
    iu = np.triu_indices(p, k=1)
    return int(np.count_nonzero(theta.yy[iu]) + p + np.count_nonzero(theta.yx))


def bic_score(cv: CovarianceView, theta: BlockPrecision) -> float:
    n = cv.n
    return 2.0 * n * partial_objective(cv, theta) \
        + math.log(n) * degrees_of_freedom(theta)


@dataclass
class SelectionResult:
    best_lam: float
    best_rho: float
    best_theta: BlockPrecision
    best_fit: FitResult
    method: str
    table: list[dict] = field(default_factory=list)


def _better(score, lam, rho, best):
    if best is None or score < best[0]:
        return True
    return score == best[0] and (lam, rho) > (best[1], best[2])


def select(cv: CovarianceView, grid: GridSpec,
           cfg: SolverConfig | None = None,
           cv_val: CovarianceView | None = None) -> SelectionResult:
    """Fit every grid cell and keep the best-scoring estimate.

    Validation scoring needs cv_val. A cell whose solve fails is marked
    in the table (score inf) and breaks the warm-start chain; selection
    fails only if every cell does.
    """
    if grid.method == "validation" and cv_val is None:
        raise ValueError("validation selection needs a validation view")
    cfg = cfg or SolverConfig()
    table: list[dict] = []
    best = None
    best_theta = None
    best_fit = None
    for rho in grid.rhos:
        warm = None
        for lam in grid.lambdas:
            pen = PenaltySpec(lam=lam, rho=rho, family=grid.family)
            row = {"lam": lam, "rho": rho, "score": math.inf, "ok": False,
                   "df": 0, "outer_iters": 0, "inner_iters": 0,
                   "termination": "", "error": ""}
            try:
                res = fit(cv, pen, cfg, init=warm)
                theta = res.theta
                if grid.method == "validation":
                    score = partial_objective(cv_val, theta)
                else:
                    score = bic_score(cv, theta)
                if not np.isfinite(score):
                    raise NonFiniteError("selection score is not finite")
                warm = theta.copy()
                row.update(score=score, ok=True, df=degrees_of_freedom(theta),
                           outer_iters=res.outer_iters,
                           inner_iters=res.inner_iters,
                           termination=res.termination)
                if _better(score, lam, rho, best):
                    best = (score, lam, rho)
                    best_theta = theta.copy()
                    best_fit = res
            except SOLVER_ERRORS as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
                warm = None
            table.append(row)
    if best is None:
        raise RuntimeError("every grid cell failed")
    return SelectionResult(best_lam=best[1], best_rho=best[2],
                           best_theta=best_theta, best_fit=best_fit,
                           method=grid.method, table=table)


def select_ggm(cv: CovarianceView, lambdas, cfg: SolverConfig | None = None,
               cv_val: CovarianceView | None = None,
               method: str = "validation", marginal: bool = False):
    """Single-weight selection for the plain GGM baselines.

    Fits the joint (or marginal) log-det problem along a descending lam
    path with warm starts and scores like select(). Returns
    (best_lam, best FitResult, table); the estimate is the yy block of
    the returned fit.
    """
    if method not in SELECTION_METHODS:
        raise ValueError(f"method must be one of {SELECTION_METHODS}")
    view = marginal_view(cv) if marginal else joint_view(cv)
    view_val = None
    if method == "validation":
        if cv_val is None:
            raise ValueError("validation selection needs a validation view")
        view_val = marginal_view(cv_val) if marginal else joint_view(cv_val)
    cfg = cfg or SolverConfig()
    table: list[dict] = []
    best = None
    best_res = None
    warm = None
    for lam in sorted(set(float(v) for v in lambdas), reverse=True):
        pen = PenaltySpec(lam=lam, rho=0.0)
        row = {"lam": lam, "rho": 0.0, "score": math.inf, "ok": False,
               "df": 0, "outer_iters": 0, "inner_iters": 0,
               "termination": "", "error": ""}
        try:
            res = fit(view, pen, cfg, init=warm)
            theta = res.theta
            if method == "validation":
                score = partial_objective(view_val, theta)
            else:
                score = bic_score(view, theta)
            if not np.isfinite(score):
                raise NonFiniteError("selection score is not finite")
            warm = theta.copy()
            row.update(score=score, ok=True, df=degrees_of_freedom(theta),
                       outer_iters=res.outer_iters, inner_iters=res.inner_iters,
                       termination=res.termination)
            if best is None or score < best[0] or \
                    (score == best[0] and lam > best[1]):
                best = (score, lam)
                best_res = res
        except SOLVER_ERRORS as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            warm = None
        table.append(row)
    if best is None:
        raise RuntimeError("every lam failed")
    return best[1], best_res, table


def _nslasso_validation_score(nf: NeighborhoodFit, d_val: Dataset) -> float:
    """Sum over nodes of the covariance-form quadratic on validation
    moments (the Lasso objective without its penalty)."""
    z = np.hstack([d_val.y, d_val.x])
    s = symmetrize(z.T @ z / d_val.n)
    p = d_val.p
    total = 0.0
    for i in range(p):
        keep = np.arange(s.shape[0]) != i
        th = nf.coefs[i, keep]
        total += float(th @ s[np.ix_(keep, keep)] @ th + 2.0 * th @ s[keep, i])
    return total


def select_nslasso(d: Dataset, rhos, d_val: Dataset,
                   tol: float = 1e-8, max_iter: int = 1000,
                   and_rule: bool = False):
    """Pick the neighborhood-Lasso weight by validation prediction error.

    Returns (best_rho, best NeighborhoodFit, table).
    """
    table: list[dict] = []
    best = None
    best_fit = None
    for rho in sorted(set(float(v) for v in rhos), reverse=True):
        nf = fit_nslasso(d, rho, tol=tol, max_iter=max_iter, and_rule=and_rule)
        score = _nslasso_validation_score(nf, d_val)
        table.append({"lam": 0.0, "rho": rho, "score": score, "ok": True,
                      "df": int(nf.coefs.astype(bool).sum()),
                      "outer_iters": 0, "inner_iters": 0,
                      "termination": "", "error": ""})
        if best is None or score < best[0] or (score == best[0] and rho > best[1]):
            best = (score, rho)
            best_fit = nf
    return best[1], best_fit, table
