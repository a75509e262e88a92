"""Path planners sharing one request/result interface."""

from __future__ import annotations

from ..errors import ValidationError
from .base import DEFAULT_TIME_LIMIT, PlanRequest, PlanResult, Scorer
from .bruteforce import brute_force_plan
from .ero import EROConfig, ero_plan
from .genetic import GAConfig, ga_crossover, ga_init_population, ga_mutate, ga_plan
from .greedy import greedy_plan
from .recursive import RGConfig, recursive_greedy_plan

ALGORITHMS = ("greedy", "ga", "rg", "ero", "bruteforce")

_CONFIGS = {"ga": GAConfig, "rg": RGConfig, "ero": EROConfig}


def make_config(algo: str, options: dict | None = None):
    """Algorithm config from a plain dict (e.g. a parsed JSON config file)."""
    cls = _CONFIGS.get(algo)
    if cls is None:
        if options:
            raise ValidationError(f"{algo} takes no configuration options")
        return None
    try:
        return cls(**(options or {}))
    except TypeError as exc:
        raise ValidationError(f"bad {algo} configuration: {exc}") from None


def run_planner(req: PlanRequest, algo: str, config=None, time_limit: float | None = DEFAULT_TIME_LIMIT) -> PlanResult:
    """Dispatch to one of :data:`ALGORITHMS`."""
    if algo == "greedy":
        return greedy_plan(req)
    if algo == "ga":
        return ga_plan(req, config or GAConfig())
    if algo == "rg":
        return recursive_greedy_plan(req, config or RGConfig(), time_limit=time_limit)
    if algo == "ero":
        return ero_plan(req, config or EROConfig())
    if algo == "bruteforce":
        return brute_force_plan(req, time_limit=time_limit)
    raise ValueError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")


__all__ = [
    "ALGORITHMS",
    "DEFAULT_TIME_LIMIT",
    "EROConfig",
    "GAConfig",
    "PlanRequest",
    "PlanResult",
    "RGConfig",
    "Scorer",
    "brute_force_plan",
    "ero_plan",
    "ga_crossover",
    "ga_init_population",
    "ga_mutate",
    "ga_plan",
    "greedy_plan",
    "make_config",
    "recursive_greedy_plan",
    "run_planner",
]
