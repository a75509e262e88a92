"""Steiner TSP on incomplete graphs via the metric closure.

Exact Held-Karp dynamic programming for small required sets, nearest
neighbour plus 2-opt beyond that. Closure edges are expanded back into
concrete shortest walks so the result is always a walk on the graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .graph import EPS, AreaGraph, Path, concat, shortest_path

EXACT_LIMIT = 12


@dataclass
class MetricClosure:
    required: list[int]
    dist: np.ndarray
    witness: dict[tuple[int, int], Path]

    def index(self, vid: int) -> int:
        return self.required.index(vid)


def closure_dist(g: AreaGraph, req: Sequence[int]) -> np.ndarray:
    n = len(req)
    dist = np.zeros((n, n))
    for i, a in enumerate(req):
        da = g.distances_from(a)
        for j in range(i + 1, n):
            if req[j] not in da:
                raise ValidationError(f"required vertices {a} and {req[j]} are not connected")
            dist[i, j] = dist[j, i] = da[req[j]]
    return dist


def metric_closure(g: AreaGraph, required: Sequence[int]) -> MetricClosure:
    """All-pairs shortest-path costs and witness walks among ``required``."""
    req = list(dict.fromkeys(required))
    dist = closure_dist(g, req)
    witness = {(a, b): shortest_path(g, a, b) for a in req for b in req}
    return MetricClosure(req, dist, witness)


def _held_karp(dist: np.ndarray, start: int, end: int) -> list[int]:
    """Optimal order over all nodes from ``start`` to ``end`` (may coincide)."""
    n = len(dist)
    middle = [i for i in range(n) if i != start and i != end]
    m = len(middle)
    if m == 0:
        return [start] if start == end else [start, end]
    d_mid = dist[np.ix_(middle, middle)]
    full = 1 << m
    dp = np.full((full, m), np.inf)
    parent = np.full((full, m), -1, dtype=np.int64)
    for k in range(m):
        dp[1 << k, k] = dist[start, middle[k]]

    masks = np.arange(full)
    popcount = np.zeros(full, dtype=np.int64)
    for k in range(m):
        popcount += (masks >> k) & 1
    bits = 1 << np.arange(m)

    for size in range(1, m):
        layer = masks[popcount == size]
        # cand[s, j, k]: reach k from subset s ending at j
        cand = dp[layer][:, :, None] + d_mid[None, :, :]
        best_j = np.argmin(cand, axis=1)
        best = np.take_along_axis(cand, best_j[:, None, :], axis=1)[:, 0, :]
        for k in range(m):
            free = (layer & bits[k]) == 0
            if not free.any():
                continue
            targets = layer[free] | bits[k]
            vals = best[free, k]
            better = vals < dp[targets, k]
            dp[targets[better], k] = vals[better]
            parent[targets[better], k] = best_j[free, k][better]

    final = dp[full - 1] + dist[middle, end]
    k = int(np.argmin(final))
    order = []
    mask = full - 1
    while k >= 0:
        order.append(middle[k])
        prev = parent[mask, k]
        mask ^= 1 << k
        k = int(prev)
    order.reverse()
    return [start] + order + [end]


def _order_cost(dist: np.ndarray, order: Sequence[int]) -> float:
    return float(sum(dist[a, b] for a, b in zip(order, order[1:])))


def _nearest_neighbor(dist: np.ndarray, start: int, end: int) -> list[int]:
    left = [i for i in range(len(dist)) if i != start and i != end]
    order = [start]
    while left:
        cur = order[-1]
        nxt = min(left, key=lambda j: (dist[cur, j], j))
        order.append(nxt)
        left.remove(nxt)
    order.append(end)
    return order


def _two_opt(dist: np.ndarray, order: list[int]) -> list[int]:
    """Segment reversals with fixed endpoints until no exchange improves."""
    order = list(order)
    n = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(1, n - 2):
            for j in range(i + 1, n - 1):
                a, b = order[i - 1], order[i]
                c, d = order[j], order[j + 1]
                delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
                if delta < -EPS:
                    order[i : j + 1] = order[i : j + 1][::-1]
                    improved = True
    return order


def solve_order(dist: np.ndarray, start: int, end: int, exact_limit: int = EXACT_LIMIT) -> list[int]:
    """Visiting order over closure indices; exact when the set is small."""
    if len(dist) <= exact_limit:
        return _held_karp(dist, start, end)
    return _two_opt(dist, _nearest_neighbor(dist, start, end))


def steiner_tsp(
    g: AreaGraph,
    required: Sequence[int],
    start: int,
    terminal: int,
    exact_limit: int = EXACT_LIMIT,
) -> Path:
    """Shortest walk from start to terminal visiting every required vertex.

    ``start == terminal`` gives a closed tour.
    """
    req = list(dict.fromkeys(required))
    for v in (start, terminal):
        if v not in req:
            req.append(v)
    for v in req:
        if v not in g:
            raise ValidationError(f"unknown required vertex {v}")
    dist = closure_dist(g, req)
    order = solve_order(dist, req.index(start), req.index(terminal), exact_limit)
    if len(order) == 1:
        return (start,)
    ids = [req[i] for i in order]
    return concat(*(shortest_path(g, a, b) for a, b in zip(ids, ids[1:])))
