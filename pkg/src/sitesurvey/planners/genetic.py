"""Genetic algorithm over walks encoded as vertex lists."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Sequence

from ..errors import ValidationError
from ..graph import EPS, AreaGraph, Path, path_cost, shortest_path
from .base import PlanRequest, PlanResult, Scorer

MAX_RETRIES = 50


@dataclass(frozen=True)
class GAConfig:
    pop_size: int = 200
    tournament_size: int = 10
    mutation_fraction: float = 0.9
    generations: int = 5

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValidationError("pop_size must be >= 2")
        if not 2 <= self.tournament_size <= self.pop_size:
            raise ValidationError("tournament_size must lie in [2, pop_size]")
        if not 0.0 <= self.mutation_fraction <= 1.0:
            raise ValidationError("mutation_fraction must lie in [0, 1]")
        if self.generations < 1:
            raise ValidationError("generations must be >= 1")


def _cheapest_insertion(g: AreaGraph, seq: Sequence[int], v: int) -> tuple[list[int], float]:
    """Insert ``v`` where it lengthens ``seq`` the least, routing by shortest paths."""
    if len(seq) == 1:
        a = seq[0]
        return list(shortest_path(g, a, v)) + list(shortest_path(g, v, a))[1:], 2 * g.distance(a, v)
    best_i, best_inc = 0, float("inf")
    for i, (a, b) in enumerate(zip(seq, seq[1:])):
        inc = g.distance(a, v) + g.distance(v, b) - g.edge_length(a, b)
        if inc < best_inc - EPS:
            best_i, best_inc = i, inc
    a, b = seq[best_i], seq[best_i + 1]
    new = list(seq[:best_i]) + list(shortest_path(g, a, v)) + list(shortest_path(g, v, b))[1:]
    return new + list(seq[best_i + 2 :]), best_inc


def _random_chromosome(req: PlanRequest, rng: random.Random, frac: float) -> Path | None:
    g, budget = req.graph, req.budget
    half = frac * budget

    # random adjacent walk until the first-half budget is spent
    seq, cost = [req.start], 0.0
    while cost < half:
        nbrs = g.neighbors(seq[-1])
        if not nbrs:
            break
        v = rng.choice(nbrs)
        step = g.edge_length(seq[-1], v)
        if cost + step > half:
            break
        seq.append(v)
        cost += step

    # close to the terminal, then spend what is left on random insertions
    remaining = budget - cost
    seq2 = list(shortest_path(g, seq[-1], req.terminal))
    cost2 = path_cost(seq2, g)
    if cost2 > remaining + EPS:
        return None
    while cost2 < remaining:
        pool = sorted(set(g.vertex_ids) - set(seq) - set(seq2))
        if not pool:
            break
        new, inc = _cheapest_insertion(g, seq2, rng.choice(pool))
        if cost2 + inc > remaining + EPS:
            break
        seq2, cost2 = new, cost2 + inc
    return tuple(seq + seq2[1:])


def ga_init_population(req: PlanRequest, cfg: GAConfig, rng: random.Random | None = None) -> list[Path]:
    """Random feasible chromosomes built half by random walk, half by insertion.

    A chromosome that overshoots the budget is redrawn; after
    ``MAX_RETRIES`` failures the first-half share of the budget shrinks by
    10% and drawing resumes.
    """
    rng = random.Random(req.seed) if rng is None else rng
    pop: list[Path] = []
    while len(pop) < cfg.pop_size:
        frac = 0.5
        for _ in range(60):
            chrom = None
            for _ in range(MAX_RETRIES):
                chrom = _random_chromosome(req, rng, frac)
                if chrom is not None and path_cost(chrom, req.graph) <= req.budget + EPS:
                    break
                chrom = None
            if chrom is not None:
                break
            frac *= 0.9
        else:
            raise ValidationError("could not generate a feasible chromosome")
        pop.append(chrom)
    return pop


def ga_crossover(
    a: Sequence[int], b: Sequence[int], g: AreaGraph, budget: float, rng: random.Random
) -> list[Path]:
    """Single-point crossover at a random common intermediate vertex.

    The segments after the first occurrence of the crossover vertex are
    swapped. Children over budget are dropped; parents without a common
    intermediate vertex have no children.
    """
    common = sorted(set(a[1:-1]) & set(b[1:-1]))
    if not common:
        return []
    v = rng.choice(common)
    i = a.index(v, 1)
    j = b.index(v, 1)
    kids = [tuple(b[:j]) + tuple(a[i:]), tuple(a[:i]) + tuple(b[j:])]
    return [k for k in kids if path_cost(k, g) <= budget + EPS]


def ga_mutate(p: Sequence[int], g: AreaGraph, budget: float, rng: random.Random) -> Path:
    """Local extension between two adjacent vertices of the walk.

    A common neighbour of the pair is inserted when one fits the budget.
    Otherwise two linked vertices, one adjacent to each end of the pair, are
    inserted. The walk is returned unchanged when neither fits.
    """
    p = tuple(p)
    if len(p) < 2:
        return p
    # prefer pairs of intermediate vertices; short walks fall back to any pair
    positions = list(range(1, len(p) - 2)) or list(range(len(p) - 1))
    i = rng.choice(positions)
    vi, vj = p[i], p[i + 1]
    spare = budget - path_cost(p, g) + g.edge_length(vi, vj)

    ni, nj = set(g.neighbors(vi)), set(g.neighbors(vj))
    shared = sorted(
        k for k in (ni & nj) if g.edge_length(vi, k) + g.edge_length(k, vj) <= spare + EPS
    )
    if shared:
        k = rng.choice(shared)
        return p[: i + 1] + (k,) + p[i + 1 :]

    bridges = sorted(
        (x, y)
        for x in ni - {vj}
        for y in nj - {vi}
        if x != y
        and g.has_edge(x, y)
        and g.edge_length(vi, x) + g.edge_length(x, y) + g.edge_length(y, vj) <= spare + EPS
    )
    if bridges:
        x, y = rng.choice(bridges)
        return p[: i + 1] + (x, y) + p[i + 1 :]
    return p


def _tournament(fitness: Sequence[float], k: int, rng: random.Random) -> int:
    entrants = rng.sample(range(len(fitness)), k)
    return max(entrants, key=lambda idx: (fitness[idx], -idx))


def ga_plan(req: PlanRequest, cfg: GAConfig = GAConfig()) -> PlanResult:
    """Evolve walks with fitness f_D, keeping the best individuals each generation.

    Each generation runs pop_size/2 tournaments pairs through crossover,
    mutates ``mutation_fraction`` of the children, then merges parents and
    children and keeps the fittest ``pop_size`` distinct walks (duplicates
    only pad the population when there are too few distinct ones).
    ``PlanResult.trace`` holds the best fitness after initialization and
    after each generation.
    """
    started = time.perf_counter()
    rng = random.Random(req.seed)
    scorer = Scorer(req)
    g, budget = req.graph, req.budget

    pop = ga_init_population(req, cfg, rng)
    fit = [scorer.utility(p) for p in pop]
    k = min(cfg.tournament_size, len(pop))
    trace = [max(fit)]

    for _ in range(cfg.generations):
        children: list[Path] = []
        for _ in range(cfg.pop_size // 2):
            a = _tournament(fit, k, rng)
            b = _tournament(fit, k, rng)
            children.extend(ga_crossover(pop[a], pop[b], g, budget, rng))
        n_mut = round(cfg.mutation_fraction * len(children))
        for idx in sorted(rng.sample(range(len(children)), n_mut)):
            children[idx] = ga_mutate(children[idx], g, budget, rng)

        merged = pop + children
        merged_fit = fit + [scorer.utility(c) for c in children]
        order = sorted(range(len(merged)), key=lambda idx: -merged_fit[idx])
        seen: set = set()
        unique, dupes = [], []
        for idx in order:
            (dupes if merged[idx] in seen else unique).append(idx)
            seen.add(merged[idx])
        keep = (unique + dupes)[: cfg.pop_size]
        pop = [merged[idx] for idx in keep]
        fit = [merged_fit[idx] for idx in keep]
        trace.append(fit[0])

    return scorer.result(pop[0], "ga", started, trace)
