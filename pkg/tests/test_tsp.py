import itertools
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path as cs_shortest_path

from conftest import random_grid_graph
from sitesurvey.demo import grid_graph
from sitesurvey.errors import ValidationError
from sitesurvey.graph import AreaGraph, path_cost, shortest_path, validate_path
from sitesurvey.tsp import _nearest_neighbor, _order_cost, _two_opt, metric_closure, solve_order, steiner_tsp


def scipy_apsp(g):
    ids = g.vertex_ids
    pos = {v: i for i, v in enumerate(ids)}
    rows, cols, vals = [], [], []
    for u, v, w in g.edges():
        rows += [pos[u], pos[v]]
        cols += [pos[v], pos[u]]
        vals += [w, w]
    m = csr_matrix((vals, (rows, cols)), shape=(len(ids), len(ids)))
    return cs_shortest_path(m, directed=False), pos


def permutation_oracle(g, required, start, terminal):
    """Optimal closure tour by enumerating every visiting order."""
    d, pos = scipy_apsp(g)
    mids = [v for v in dict.fromkeys(required) if v not in (start, terminal)]
    best = np.inf
    for perm in itertools.permutations(mids):
        seq = [start, *perm, terminal]
        best = min(best, sum(d[pos[a], pos[b]] for a, b in zip(seq, seq[1:])))
    return best


def check_tour(walk, g, required, start, terminal):
    validate_path(walk, g)
    assert walk[0] == start and walk[-1] == terminal
    assert set(required) <= set(walk)


class TestMetricClosure:
    def test_adjacent(self):
        g = AreaGraph({0: (0, 0), 1: (3, 0)}, [(0, 1)])
        mc = metric_closure(g, [0, 1])
        assert mc.dist[0, 1] == 3.0

    def test_witness(self):
        g = AreaGraph({0: (0, 0), 1: (1, 0), 2: (2, 0)}, [(0, 1), (1, 2)])
        mc = metric_closure(g, [0, 2])
        assert mc.dist[0, 1] == 2.0 and mc.witness[(0, 2)] == (0, 1, 2)

    def test_grid_against_scipy(self, grid4):
        req = random.Random(3).sample(range(16), 5)
        mc = metric_closure(grid4, req)
        d, pos = scipy_apsp(grid4)
        for i, a in enumerate(req):
            for j, b in enumerate(req):
                assert mc.dist[i, j] == pytest.approx(d[pos[a], pos[b]])
                assert path_cost(mc.witness[(a, b)], grid4) == pytest.approx(mc.dist[i, j])

    def test_disconnected(self):
        g = AreaGraph({0: (0, 0), 1: (1, 0), 2: (9, 9)}, [(0, 1)])
        with pytest.raises(ValidationError):
            metric_closure(g, [0, 2])

    @given(st.integers(0, 10_000))
    def test_metric_properties(self, seed):
        rng = random.Random(seed)
        g = random_grid_graph(rng, 4, 4)
        mc = metric_closure(g, rng.sample(g.vertex_ids, 6))
        d = mc.dist
        assert np.allclose(d, d.T) and np.all(np.diag(d) == 0)
        assert np.all(d[:, :, None] <= d[:, None, :] + d.T[None, :, :] + 1e-9)


class TestSteinerTSP:
    def test_two_required(self, grid4):
        assert steiner_tsp(grid4, [0, 15], 0, 15) == shortest_path(grid4, 0, 15)

    def test_single_vertex(self, grid3):
        assert steiner_tsp(grid3, [4], 4, 4) == (4,)

    def test_unit_square_tour(self):
        g = grid_graph(2, 2)
        t = steiner_tsp(g, [0, 1, 2, 3], 0, 0)
        check_tour(t, g, [0, 1, 2, 3], 0, 0)
        assert path_cost(t, g) == 4.0 == permutation_oracle(g, [0, 1, 2, 3], 0, 0)

    def test_eight_required(self, grid4):
        req = [0, 3, 5, 6, 9, 12, 14, 15]
        t = steiner_tsp(grid4, req, 0, 15)
        check_tour(t, grid4, req, 0, 15)
        assert path_cost(t, grid4) == pytest.approx(permutation_oracle(grid4, req, 0, 15))

    def test_endpoints_added(self, grid4):
        t = steiner_tsp(grid4, [5], 0, 3)
        check_tour(t, grid4, [5], 0, 3)

    def test_deterministic(self, grid4):
        req = [0, 7, 9, 13]
        assert steiner_tsp(grid4, req, 0, 0) == steiner_tsp(grid4, req, 0, 0)

    @given(st.integers(0, 10_000))
    def test_exact_vs_oracle(self, seed):
        rng = random.Random(seed)
        g = random_grid_graph(rng, 4, 4)
        req = rng.sample(g.vertex_ids, rng.randint(2, 7))
        s, t = req[0], rng.choice(req)
        walk = steiner_tsp(g, req, s, t)
        check_tour(walk, g, req, s, t)
        assert path_cost(walk, g) == pytest.approx(permutation_oracle(g, req, s, t), abs=1e-9)

    @given(st.integers(0, 10_000))
    def test_permutation_invariant(self, seed):
        rng = random.Random(seed)
        g = random_grid_graph(rng, 4, 4)
        req = rng.sample(g.vertex_ids, 6)
        shuffled = req[:]
        rng.shuffle(shuffled)
        a = path_cost(steiner_tsp(g, req, req[0], req[1]), g)
        b = path_cost(steiner_tsp(g, shuffled, req[0], req[1]), g)
        assert a == pytest.approx(b, abs=1e-9)

    @given(st.integers(0, 10_000))
    def test_heuristic_mode(self, seed):
        rng = random.Random(seed)
        g = random_grid_graph(rng, 5, 5)
        req = rng.sample(g.vertex_ids, 15)
        walk = steiner_tsp(g, req, req[0], req[0])
        check_tour(walk, g, req, req[0], req[0])
        # 2-opt never worsens the nearest-neighbour start
        mc = metric_closure(g, req)
        nn = _nearest_neighbor(mc.dist, 0, 0)
        assert _order_cost(mc.dist, _two_opt(mc.dist, nn)) <= _order_cost(mc.dist, nn) + 1e-9

    def test_heuristic_close_to_exact(self):
        rng = random.Random(0)
        g = random_grid_graph(rng, 4, 4, drop=0.0)
        req = rng.sample(g.vertex_ids, 9)
        mc = metric_closure(g, req)
        exact = _order_cost(mc.dist, solve_order(mc.dist, 0, 1))
        heur = _order_cost(mc.dist, solve_order(mc.dist, 0, 1, exact_limit=0))
        assert exact <= heur + 1e-9 and heur <= 1.5 * exact
