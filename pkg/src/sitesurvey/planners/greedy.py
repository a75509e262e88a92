"""Greedy vertex insertion by marginal benefit-cost ratio."""

from __future__ import annotations

import math
import time

from ..graph import EPS, shortest_path
from ..tsp import steiner_tsp
from .base import PlanRequest, PlanResult, Scorer


def greedy_plan(req: PlanRequest) -> PlanResult:
    """Grow the walk one vertex at a time by best MBCR.

    Starting from the shortest start-terminal path, every vertex not yet on
    the walk is tried: the Steiner TSP tour over the current vertices plus the
    candidate gives its marginal utility and marginal length. The candidate
    with the highest ratio is adopted if its tour fits the budget; otherwise
    the search stops.

    Candidates whose tour does not raise the utility are never adopted, and a
    tour that gains utility at no extra length scores an infinite ratio.
    """
    started = time.perf_counter()
    scorer = Scorer(req)
    g = req.graph
    path = shortest_path(g, req.start, req.terminal)
    cur_u, cur_c = scorer.utility(path), scorer.cost(path)
    trace = [cur_u]

    while cur_c <= req.budget + EPS:
        on_path = set(path)
        best = None  # (ratio, vertex, tour, utility, cost)
        for v in g.vertex_ids:
            if v in on_path:
                continue
            tour = steiner_tsp(g, list(dict.fromkeys(path)) + [v], req.start, req.terminal)
            u, c = scorer.utility(tour), scorer.cost(tour)
            gain, extra = u - cur_u, c - cur_c
            if gain <= 0:
                continue
            ratio = gain / extra if extra > EPS else math.inf
            # ties go to the smallest vertex id
            if best is None or ratio > best[0]:
                best = (ratio, v, tour, u, c)
        if best is None:
            break
        _, _, tour, u, c = best
        if c > req.budget + EPS:
            break
        path, cur_u, cur_c = tour, u, c
        trace.append(cur_u)

    return scorer.result(path, "greedy", started, trace)
