"""Informative path planning for WiFi fingerprint site surveys."""

from .errors import NumericalError, SurveyError, TimeLimitExceeded, ValidationError
from .gp import (
    Hyperparameters,
    UtilityContext,
    cov_matrix,
    fit_hyperparameters,
    gaussian_entropy,
    gp_posterior,
    kernel_eval,
    log_marginal_likelihood,
    mi_gain,
    path_utility,
)
from .graph import AreaGraph, load_graph, path_cost, sample_along_path, shortest_path
from .planners import (
    EROConfig,
    GAConfig,
    PlanRequest,
    PlanResult,
    RGConfig,
    brute_force_plan,
    ero_plan,
    ga_plan,
    greedy_plan,
    recursive_greedy_plan,
    run_planner,
)
from .tsp import metric_closure, steiner_tsp

__version__ = "0.1.0"

__all__ = [
    "AreaGraph",
    "EROConfig",
    "GAConfig",
    "Hyperparameters",
    "NumericalError",
    "PlanRequest",
    "PlanResult",
    "RGConfig",
    "SurveyError",
    "TimeLimitExceeded",
    "UtilityContext",
    "ValidationError",
    "brute_force_plan",
    "cov_matrix",
    "ero_plan",
    "fit_hyperparameters",
    "ga_plan",
    "gaussian_entropy",
    "gp_posterior",
    "greedy_plan",
    "kernel_eval",
    "load_graph",
    "log_marginal_likelihood",
    "metric_closure",
    "mi_gain",
    "path_cost",
    "path_utility",
    "recursive_greedy_plan",
    "run_planner",
    "sample_along_path",
    "shortest_path",
    "steiner_tsp",
]
