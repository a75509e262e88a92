"""Edge-based Random Orienteering.

Every edge becomes an "edge node" placed at its midpoint. A random local
search adds or deletes edge nodes; the walk for a selection is the Steiner
TSP tour through the chosen midpoints on the subdivided graph.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from ..errors import ValidationError
from ..gp import path_utility
from ..graph import EPS, AreaGraph, Path, sample_along_path
from ..tsp import steiner_tsp
from .base import PlanRequest, PlanResult, Scorer


@dataclass(frozen=True)
class EROConfig:
    iterations: int = 200
    seed: int | None = None  # falls back to the request seed

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")


@dataclass(frozen=True)
class EdgeNode:
    u: int
    v: int
    mid: int  # vertex id in the subdivided graph
    reward: float


def subdivide(g: AreaGraph) -> tuple[AreaGraph, dict[int, tuple[int, int]]]:
    """Split every edge at its midpoint.

    Returns the subdivided graph and a map from midpoint id to the original
    (u, v) edge.
    """
    base = max(g.vertex_ids) + 1
    verts = {v: g.point(v) for v in g.vertex_ids}
    edges = []
    mids = {}
    for k, (u, v, length) in enumerate(g.edges()):
        m = base + k
        (x0, y0), (x1, y1) = g.point(u), g.point(v)
        verts[m] = ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
        edges += [(u, m, length / 2.0), (m, v, length / 2.0)]
        mids[m] = (u, v)
    return AreaGraph(verts, edges), mids


def edge_nodes(req: PlanRequest, scorer: Scorer | None = None) -> list[EdgeNode]:
    """Edge nodes with their standalone reward: f_D of sampling that edge alone."""
    scorer = Scorer(req) if scorer is None else scorer
    sub, mids = subdivide(req.graph)
    out = []
    for m, (u, v) in mids.items():
        pts = sample_along_path((u, v), req.graph, req.sample_interval)
        out.append(EdgeNode(u, v, m, path_utility(scorer.ctx, pts)))
    return out


def collapse(walk: Path, mids: dict[int, tuple[int, int]]) -> Path:
    """Map a walk on the subdivided graph back onto the original graph.

    Passing through a midpoint becomes a traversal of its edge; touching a
    midpoint and turning back becomes an out-and-back over the whole edge.
    """
    out = [walk[0]]
    for i in range(1, len(walk) - 1):
        m = walk[i]
        if m not in mids:
            if out[-1] != m:
                out.append(m)
            continue
        prev, nxt = walk[i - 1], walk[i + 1]
        if prev == nxt:
            u, v = mids[m]
            out += [v if prev == u else u, prev]
        else:
            out.append(nxt)
    if len(walk) > 1 and out[-1] != walk[-1]:
        out.append(walk[-1])
    return tuple(out)


def ero_plan(req: PlanRequest, cfg: EROConfig = EROConfig()) -> PlanResult:
    """Hill climbing over edge-node subsets.

    Each iteration adds an edge node (drawn with probability proportional
    to its reward) or deletes a uniformly chosen one, routes the selection
    and accepts it only if the walk fits the budget and strictly improves
    f_D. ``PlanResult.trace`` holds the utility after every accepted move.
    """
    started = time.perf_counter()
    rng = random.Random(req.seed if cfg.seed is None else cfg.seed)
    scorer = Scorer(req)
    sub, mids = subdivide(req.graph)
    nodes = edge_nodes(req, scorer)
    weight = {n.mid: max(n.reward, 0.0) + 1e-12 for n in nodes}

    selected: list[int] = []
    path = steiner_tsp(req.graph, [req.start, req.terminal], req.start, req.terminal)
    cur = scorer.utility(path)
    trace = [cur]

    for _ in range(cfg.iterations if weight else 0):
        free = [m for m in weight if m not in selected]
        add = not selected or (free and rng.random() < 0.5)
        if add:
            m = rng.choices(free, weights=[weight[f] for f in free])[0]
            cand_sel = sorted(selected + [m])
        else:
            m = rng.choice(selected)
            cand_sel = [s for s in selected if s != m]
        walk = steiner_tsp(sub, [req.start, req.terminal] + cand_sel, req.start, req.terminal)
        cand = collapse(walk, mids)
        if scorer.cost(cand) > req.budget + EPS:
            continue
        val = scorer.utility(cand)
        if val > cur:
            selected, path, cur = cand_sel, cand, val
            trace.append(cur)

    return scorer.result(path, "ero", started, trace)
