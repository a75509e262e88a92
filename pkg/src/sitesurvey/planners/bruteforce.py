"""Exhaustive search over budget-feasible walks (the optimality oracle)."""

from __future__ import annotations

import time

from ..graph import EPS
from .base import DEFAULT_TIME_LIMIT, Deadline, PlanRequest, PlanResult, Scorer


def brute_force_plan(req: PlanRequest, time_limit: float | None = DEFAULT_TIME_LIMIT) -> PlanResult:
    """Enumerate every walk from start to terminal within budget, keep the best.

    Partial walks are pruned once their cost plus the shortest remaining
    distance to the terminal exceeds the budget. Walks are explored
    depth-first with neighbours in id order and only a strictly better
    utility replaces the incumbent, so the result is deterministic.

    Raises TimeLimitExceeded when the enumeration runs past ``time_limit``.
    """
    started = time.perf_counter()
    deadline = Deadline(time_limit, "brute force")
    scorer = Scorer(req)
    g = req.graph
    budget = req.budget + EPS
    to_t = g.distances_from(req.terminal)
    nbrs = {v: [(w, g.edge_length(v, w)) for w in g.neighbors(v)] for v in g.vertex_ids}

    best_path = None
    best_val = -float("inf")
    walk = [req.start]
    # explicit stack of (cost so far, iterator over neighbours of walk[-1])
    stack = [(0.0, iter(nbrs[req.start]))]
    visited = 0
    if req.start == req.terminal:
        best_path, best_val = (req.start,), scorer.utility((req.start,), memo=False)
    while stack:
        cost, it = stack[-1]
        step = next(it, None)
        if step is None:
            stack.pop()
            walk.pop()
            continue
        w, l = step
        c = cost + l
        if w not in to_t or c + to_t[w] > budget:
            continue
        walk.append(w)
        stack.append((c, iter(nbrs[w])))
        visited += 1
        if visited % 256 == 0:
            deadline.check()
        if w == req.terminal:
            val = scorer.utility(walk, memo=False)
            if val > best_val:
                best_val, best_path = val, tuple(walk)
    return scorer.result(best_path, "bruteforce", started)
