import random

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sitesurvey.demo import grid_graph
from sitesurvey.gp import Hyperparameters
from sitesurvey.graph import AreaGraph
from sitesurvey.planners import PlanRequest

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# utility of the optimal walk on the 3x3 oracle instance, from brute_force_plan
ORACLE_3X3 = 18.249135967406744
UNIT_HYPER = Hyperparameters(sigma_f=1.0, length_scale=1.0, sigma_n=0.1)

# (criterion, passed, detail) rows collected by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def oracle_request(seed: int = 0, budget: float = 8.0) -> PlanRequest:
    return PlanRequest(grid_graph(3, 3), 0, 0, budget, UNIT_HYPER, 0.5, seed=seed)


def random_grid_graph(rng: random.Random, rows: int, cols: int, drop: float = 0.3) -> AreaGraph:
    """Grid with a random subset of edges removed, kept connected via a random spanning tree."""
    g = grid_graph(rows, cols)
    edges = [(u, v) for u, v, _ in g.edges()]
    rng.shuffle(edges)
    parent = list(range(rows * cols))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree, rest = [], []
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.append((u, v))
        else:
            rest.append((u, v))
    kept = tree + [e for e in rest if rng.random() > drop]
    return AreaGraph({v: g.point(v) for v in g.vertex_ids}, kept)


@pytest.fixture
def unit_hyper():
    return UNIT_HYPER


@pytest.fixture
def grid3():
    return grid_graph(3, 3)


@pytest.fixture
def grid4():
    return grid_graph(4, 4)


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
