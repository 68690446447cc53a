"""Bayesian optimization with threshold-guided marginal likelihood maximization."""

from .acquisition import DomainBox, expected_improvement, optimize_acquisition
from .benchmarks import BenchmarkSpec, evaluate, registry
from .bo import BOConfig, RunRecord, best_point, run_bo
from .gp import (
    Dataset,
    FittedGP,
    NumericalError,
    Posterior,
    fit,
    log_marginal_likelihood,
    log_marginal_likelihood_grad,
    log_pseudo_likelihood,
    predict,
)
from .kernels import KernelParams, covariance_matrix, matern52
from .model_selection import (
    Kind,
    Optimizer,
    ParamHistory,
    SelectionStrategy,
    select_params,
    threshold_check,
)
from .optim import Bounds, OptimResult, Tolerances, bfgs_minimize, lbfgsb_minimize, multistart_minimize

__version__ = "0.1.0"
