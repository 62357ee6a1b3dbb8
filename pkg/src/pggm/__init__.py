"""Sparse precision estimation for a response block given covariates.

The estimator fits the response-rows blocks of a joint Gaussian
precision matrix by minimizing an l1-penalized partial likelihood,
without ever estimating the covariate block. See the README for the
model, the solver, and the command line tools.
"""

from .baselines import (FullPrecision, NeighborhoodFit, UnivariateFit,
                        fit_full_ggm, fit_marginal_ggm, fit_nslasso,
                        fit_univariate, from_regression, lasso_cd,
                        to_regression)
from .covariance import (CovarianceView, Dataset, empirical_covariance,
                         full_sigma, joint_view, marginal_view,
                         read_dataset_bin, read_dataset_csv, read_matrix_bin,
                         write_dataset_bin, write_matrix_bin)
from .linalg import NotPDError, extreme_eigenvalues, soft_threshold, symmetrize
from .metrics import (MetricsReport, TheoryDiagnostics, links_above,
                      norm_losses, support_fscore, support_of,
                      test_objective, theory_diagnostics, topk_link_precision)
from .modelselect import (GridSpec, SelectionResult, bic_score, default_grid,
                          degrees_of_freedom, lambda_max_heuristic, log_grid,
                          select, select_ggm, select_nslasso)
from .solver import (BlockPrecision, FitResult, NonFiniteError, PenaltySpec,
                     SolverConfig, StepUnderflowError, decomposition_residual,
                     fit, full_objective, grad_yx, grad_yy, kkt_residuals,
                     objective, partial_objective, penalty_value,
                     solve_yx_only)
from .synth import (GroundTruth, InfeasibleError, RetryExhaustedError,
                    SyntheticSpec, generate_truth, load_truth, sample_dataset,
                    save_truth, stream_rng)

__version__ = "0.1.0"

__all__ = [
    "BlockPrecision", "CovarianceView", "Dataset", "FitResult",
    "FullPrecision", "GridSpec", "GroundTruth", "InfeasibleError",
    "MetricsReport", "NeighborhoodFit", "NonFiniteError", "NotPDError",
    "PenaltySpec", "RetryExhaustedError", "SelectionResult", "SolverConfig",
    "StepUnderflowError", "SyntheticSpec", "TheoryDiagnostics",
    "UnivariateFit", "bic_score", "decomposition_residual", "default_grid",
    "degrees_of_freedom", "empirical_covariance", "extreme_eigenvalues",
    "fit", "fit_full_ggm", "fit_marginal_ggm", "fit_nslasso",
    "fit_univariate", "from_regression", "full_objective", "full_sigma",
    "generate_truth", "grad_yx", "grad_yy", "joint_view", "kkt_residuals",
    "lambda_max_heuristic", "lasso_cd", "links_above", "load_truth",
    "log_grid", "marginal_view", "norm_losses", "objective",
    "partial_objective", "penalty_value", "read_dataset_bin",
    "read_dataset_csv", "read_matrix_bin", "sample_dataset", "save_truth",
    "select", "select_ggm", "select_nslasso", "soft_threshold",
    "solve_yx_only", "stream_rng", "support_fscore", "support_of",
    "symmetrize", "test_objective", "theory_diagnostics",
    "topk_link_precision", "to_regression", "write_dataset_bin",
    "write_matrix_bin",
]
