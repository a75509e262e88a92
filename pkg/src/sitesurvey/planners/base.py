"""Request/result types and the path scorer shared by every planner."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import TimeLimitExceeded, ValidationError
from ..gp import Hyperparameters, UtilityContext, as_points, path_utility
from ..graph import EPS, AreaGraph, Path, path_cost, sample_along_path, validate_path

DEFAULT_TIME_LIMIT = 600.0


@dataclass
class PlanRequest:
    """Everything a planner needs: graph, endpoints, budget and the GP model."""

    graph: AreaGraph
    start: int
    terminal: int
    budget: float
    hyper: Hyperparameters
    sample_interval: float = 0.5
    pilot_points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    seed: int = 0

    def __post_init__(self):
        self.pilot_points = as_points(self.pilot_points)
        for v in (self.start, self.terminal):
            if v not in self.graph:
                raise ValidationError(f"unknown endpoint vertex {v}")
        if not self.sample_interval > 0:
            raise ValidationError(f"sample interval must be > 0, got {self.sample_interval}")
        if not math.isfinite(self.budget):
            raise ValidationError("budget must be finite")
        need = self.graph.distance(self.start, self.terminal)
        if self.budget < need - EPS:
            raise ValidationError(
                f"budget {self.budget} is below the shortest start-terminal cost {need}"
            )

    def context(self) -> UtilityContext:
        return UtilityContext(self.graph.points(), self.pilot_points, self.hyper)


@dataclass
class PlanResult:
    path: Path
    cost: float
    utility: float
    runtime: float
    algorithm: str
    seed: int = 0
    # per-iteration best utility, for planners that track one
    trace: list = field(default_factory=list, compare=False, repr=False)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": int(self.seed),
            "path": [int(v) for v in self.path],
            "cost": float(self.cost),
            "utility": float(self.utility),
            "runtime_s": float(self.runtime) if timing else 0.0,
        }

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "PlanResult":
        try:
            return cls(
                path=tuple(int(v) for v in d["path"]),
                cost=float(d["cost"]),
                utility=float(d["utility"]),
                runtime=float(d.get("runtime_s", 0.0)),
                algorithm=str(d["algorithm"]),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad plan document: {exc}") from exc


class Scorer:
    """Memoized f_D and cost of walks for one request."""

    def __init__(self, req: PlanRequest):
        self.req = req
        self.graph = req.graph
        self.ctx = req.context()
        self._cache: dict[tuple, float] = {}
        self.evaluations = 0

    def cost(self, p: Sequence[int]) -> float:
        return path_cost(p, self.graph)

    def utility(self, p: Sequence[int], memo: bool = True) -> float:
        key = tuple(p)
        val = self._cache.get(key)
        if val is None:
            pts = sample_along_path(key, self.graph, self.req.sample_interval)
            val = path_utility(self.ctx, pts)
            self.evaluations += 1
            if memo:
                self._cache[key] = val
        return val

    def feasible(self, p: Sequence[int]) -> bool:
        if not p or p[0] != self.req.start or p[-1] != self.req.terminal:
            return False
        try:
            validate_path(p, self.graph)
        except ValidationError:
            return False
        return self.cost(p) <= self.req.budget + EPS

    def result(self, p: Sequence[int], algorithm: str, started: float, trace=None) -> PlanResult:
        p = tuple(p)
        return PlanResult(
            path=p,
            cost=self.cost(p),
            utility=self.utility(p),
            runtime=time.perf_counter() - started,
            algorithm=algorithm,
            seed=self.req.seed,
            trace=list(trace or []),
        )


class Deadline:
    """Wall-clock limit checked cooperatively inside long searches."""

    def __init__(self, limit: float | None, what: str):
        self.limit = limit
        self.what = what
        self.t0 = time.perf_counter()

    def check(self):
        if self.limit is not None and time.perf_counter() - self.t0 > self.limit:
            raise TimeLimitExceeded(f"{self.what} exceeded its time limit of {self.limit:g} s")
