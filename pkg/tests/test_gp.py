import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import block_diag
from scipy.stats import multivariate_normal

from sitesurvey.errors import NumericalError, ValidationError
from sitesurvey.gp import (
    Hyperparameters,
    UtilityContext,
    cov_matrix,
    fit_hyperparameters,
    gaussian_entropy,
    gp_posterior,
    gp_predict_diag,
    kernel_eval,
    log_marginal_likelihood,
    mi_gain,
    path_utility,
    pilot_utility,
    robust_cholesky,
)

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord)
hypers = st.builds(
    Hyperparameters,
    sigma_f=st.floats(0.2, 5.0),
    length_scale=st.floats(0.3, 5.0),
    sigma_n=st.floats(0.05, 2.0),
    mean_const=st.floats(-80, 0),
)


def dense_mi(vertices, samples, h):
    """MI straight from the textbook formula with explicit inverses."""
    v = np.asarray(vertices, float)
    k_vv = cov_matrix(v, v, h)
    if len(samples) == 0:
        return 0.0
    s = np.asarray(samples, float)
    k_ss = cov_matrix(s, s, h) + h.sigma_n ** 2 * np.eye(len(s))
    k_vs = cov_matrix(v, s, h)
    post = k_vv - k_vs @ np.linalg.inv(k_ss) @ k_vs.T
    return 0.5 * (np.linalg.slogdet(k_vv)[1] - np.linalg.slogdet(post)[1])


class TestHyperparameters:
    def test_json_round_trip(self):
        h = Hyperparameters(2.0, 3.0, 0.5, -55.0)
        assert Hyperparameters.from_json(h.to_json()) == h

    def test_json_keys(self):
        assert set(Hyperparameters(1, 1, 0).to_dict()) == {"sigma_f", "length_scale", "sigma_n", "mean_const"}

    @pytest.mark.parametrize("bad", [(0, 1, 0), (1, 0, 0), (1, 1, -0.1), (float("nan"), 1, 0)])
    def test_invalid(self, bad):
        with pytest.raises(ValidationError):
            Hyperparameters(*bad)

    def test_missing_field(self):
        with pytest.raises(ValidationError):
            Hyperparameters.from_dict({"sigma_f": 1.0})


class TestKernel:
    def test_zero_distance(self):
        assert kernel_eval((1, 2), (1, 2), Hyperparameters(1, 1, 0)) == 1.0

    def test_one_length_scale(self):
        h = Hyperparameters(1, 2.5, 0)
        assert kernel_eval((0, 0), (1.5, 2.0), h) == pytest.approx(math.exp(-1), abs=1e-12)
        assert kernel_eval((0, 0), (1.5, 2.0), h) == pytest.approx(0.367879, abs=1e-6)

    def test_variance(self):
        assert kernel_eval((3, 3), (3, 3), Hyperparameters(2, 1, 0)) == 4.0

    @given(point, point, hypers)
    def test_symmetry_exact(self, p, q, h):
        assert kernel_eval(p, q, h) == kernel_eval(q, p, h)

    def test_cov_matrix_single(self):
        assert cov_matrix([(0, 0)], [(0, 0)], Hyperparameters(3, 1, 0)).tolist() == [[9.0]]

    def test_cov_matrix_far(self):
        k = cov_matrix([(0, 0), (100, 0)], [(0, 0), (100, 0)], Hyperparameters(1, 1, 0))
        assert k[0, 1] < 1e-9 and k[1, 0] < 1e-9

    def test_cov_matrix_line(self):
        pts = [(0, 0), (2, 0), (4, 0)]
        k = cov_matrix(pts, pts, Hyperparameters(1, 2, 0))
        assert k[0, 1] == pytest.approx(math.exp(-1)) and k[1, 2] == pytest.approx(math.exp(-1))
        assert k[0, 2] == pytest.approx(math.exp(-2))

    def test_cov_matrix_matches_kernel(self, np_rng):
        a, b = np_rng.uniform(0, 5, (4, 2)), np_rng.uniform(0, 5, (3, 2))
        h = Hyperparameters(1.3, 0.7, 0)
        k = cov_matrix(a, b, h)
        for i in range(4):
            for j in range(3):
                assert k[i, j] == pytest.approx(kernel_eval(a[i], b[j], h), rel=1e-12)

    def test_cov_matrix_empty(self):
        with pytest.raises(ValidationError):
            cov_matrix([], [(0, 0)], Hyperparameters(1, 1, 0))


class TestCholesky:
    def test_plain_when_pd(self):
        k = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert np.allclose(robust_cholesky(k), np.linalg.cholesky(k))

    def test_jitter_rescues_singular(self):
        pts = [(0, 0), (0, 0)]
        low = robust_cholesky(cov_matrix(pts, pts, Hyperparameters(1, 1, 0)))
        assert np.all(np.diag(low) > 0)

    def test_gives_up(self):
        with pytest.raises(NumericalError):
            robust_cholesky(np.array([[1.0, 0.0], [0.0, -5.0]]))


class TestPosterior:
    def test_interpolation(self):
        h = Hyperparameters(1, 1, 0)
        mean, cov = gp_posterior([(0, 0), (2, 0)], [-50.0, -60.0], [(2, 0)], h)
        assert mean[0] == pytest.approx(-60.0, abs=1e-9)
        assert cov[0, 0] == pytest.approx(0.0, abs=1e-9)

    def test_prior_reversion(self):
        h = Hyperparameters(2, 1, 0.1, -70)
        mean, cov = gp_posterior([(0, 0)], [-40.0], [(500, 0)], h)
        assert mean[0] == pytest.approx(-70, abs=1e-9)
        assert cov[0, 0] == pytest.approx(4.0, abs=1e-9)

    def test_two_train_one_test_closed_form(self):
        # scalar evaluation with an explicit 2x2 inverse
        h = Hyperparameters(1, 1, 0.1, 0.0)
        y1, y2 = 1.0, -0.5
        k12, k1s, k2s = math.exp(-1), math.exp(-0.5), math.exp(-0.5)
        a, b, d = 1 + 0.01, k12, 1 + 0.01
        det = a * d - b * b
        inv = [[d / det, -b / det], [-b / det, a / det]]
        w1 = k1s * inv[0][0] + k2s * inv[1][0]
        w2 = k1s * inv[0][1] + k2s * inv[1][1]
        mean_ref = w1 * y1 + w2 * y2
        var_ref = 1 - (w1 * k1s + w2 * k2s)
        mean, cov = gp_posterior([(0, 0), (1, 0)], [y1, y2], [(0.5, 0)], h)
        assert mean[0] == pytest.approx(mean_ref, abs=1e-12)
        assert cov[0, 0] == pytest.approx(var_ref, abs=1e-12)

    def test_diag_matches_full(self, np_rng):
        h = Hyperparameters(1.5, 2, 0.3, -60)
        x, xs = np_rng.uniform(0, 5, (6, 2)), np_rng.uniform(0, 5, (4, 2))
        y = np_rng.normal(-60, 2, 6)
        m1, c = gp_posterior(x, y, xs, h)
        m2, v = gp_predict_diag(x, y, xs, h)
        assert np.allclose(m1, m2) and np.allclose(np.diag(c), v)

    def test_bad_shapes(self):
        h = Hyperparameters(1, 1, 0.1)
        with pytest.raises(ValidationError):
            gp_posterior([(0, 0)], [1.0, 2.0], [(0, 0)], h)
        with pytest.raises(ValidationError):
            gp_posterior([(0, 0)], [1.0], [], h)

    @given(st.lists(point, min_size=1, max_size=8), st.lists(point, min_size=1, max_size=5), hypers)
    def test_variance_reduction(self, train, test, h):
        y = np.zeros(len(train))
        _, cov = gp_posterior(train, y, test, h)
        assert np.all(np.diag(cov) <= h.sigma_f ** 2 + 1e-9)

    @given(
        st.lists(point, min_size=1, max_size=5),
        st.lists(point, min_size=1, max_size=5),
        st.lists(point, min_size=1, max_size=4),
    )
    def test_sequential_conditioning(self, batch1, batch2, test):
        h = Hyperparameters(1.0, 1.5, 0.3)
        rng = np.random.default_rng(len(batch1) + 10 * len(batch2))
        y1, y2 = rng.normal(size=len(batch1)), rng.normal(size=len(batch2))
        m_all, c_all = gp_posterior(batch1 + batch2, np.r_[y1, y2], test, h)
        # condition on batch 1, then use that posterior as the prior for batch 2
        b2 = np.asarray(batch2, float)
        t = np.asarray(test, float)
        joint = np.vstack([b2, t])
        m_j, c_j = gp_posterior(batch1, y1, joint, h)
        n2 = len(b2)
        s = c_j[:n2, :n2] + h.sigma_n ** 2 * np.eye(n2)
        gain = np.linalg.solve(s, c_j[:n2, n2:]).T
        m_seq = m_j[n2:] + gain @ (y2 - m_j[:n2])
        c_seq = c_j[n2:, n2:] - gain @ c_j[:n2, n2:]
        assert np.allclose(m_seq, m_all, atol=1e-7)
        assert np.allclose(c_seq, c_all, atol=1e-7)


class TestEntropy:
    def test_unit(self):
        assert gaussian_entropy([[1.0]]) == pytest.approx(1.418939, abs=1e-6)
        assert gaussian_entropy([[1.0]]) == pytest.approx(0.5 * (1 + math.log(2 * math.pi)), abs=1e-12)

    def test_identity_2(self):
        assert gaussian_entropy(np.eye(2)) == pytest.approx(2.837877, abs=1e-6)

    def test_scaled(self):
        assert gaussian_entropy([[4.0]]) == pytest.approx(2.112086, abs=1e-6)

    def test_matches_scipy(self, np_rng):
        a = np_rng.normal(size=(5, 5))
        cov = a @ a.T + 0.5 * np.eye(5)
        assert gaussian_entropy(cov) == pytest.approx(multivariate_normal(cov=cov).entropy(), abs=1e-9)

    def test_not_pd(self):
        with pytest.raises(NumericalError):
            gaussian_entropy([[1.0, 2.0], [2.0, 1.0]])

    @given(st.lists(point, min_size=1, max_size=5), st.lists(point, min_size=1, max_size=5))
    def test_block_additivity(self, a, b):
        h = Hyperparameters(1, 1, 0.5)
        ca = cov_matrix(a, a, h) + 0.25 * np.eye(len(a))
        cb = cov_matrix(b, b, h) + 0.25 * np.eye(len(b))
        both = gaussian_entropy(block_diag(ca, cb))
        assert both == pytest.approx(gaussian_entropy(ca) + gaussian_entropy(cb), abs=1e-9)


class TestMutualInformation:
    def test_empty(self):
        ctx = UtilityContext([(0, 0), (1, 0)], [], Hyperparameters(1, 1, 0.1))
        assert mi_gain(ctx, []) == 0.0

    def test_single_point(self):
        ctx = UtilityContext([(0, 0)], [], Hyperparameters(1, 1, 0.1))
        assert mi_gain(ctx, [(0, 0)]) == pytest.approx(0.5 * math.log(101), abs=1e-9)

    def test_far_samples(self):
        ctx = UtilityContext([(0, 0), (1, 0)], [], Hyperparameters(1, 1, 0.1))
        assert mi_gain(ctx, [(60, 0), (0, 55)]) < 1e-9

    def test_dense_oracle_4x4_perimeter(self):
        verts = [(x, y) for x in range(4) for y in range(4)]
        h = Hyperparameters(1, 1, 0.1)
        perim = [(0, 0), (3, 0), (3, 3), (0, 3), (0, 0)]
        samples = []
        for (x0, y0), (x1, y1) in zip(perim, perim[1:]):
            for k in range(6):
                samples.append((x0 + (x1 - x0) * k / 6, y0 + (y1 - y0) * k / 6))
        samples.append((0, 0))
        assert len(samples) == 25  # 12 m at 0.5 m spacing
        ctx = UtilityContext(verts, [], h)
        assert mi_gain(ctx, samples) == pytest.approx(dense_mi(verts, samples, h), abs=1e-7)

    def test_entropy_difference(self):
        # f = H(V) - H(V | S) with both entropies from gaussian_entropy
        verts = [(0, 0), (1, 0), (0, 1)]
        h = Hyperparameters(1.2, 0.8, 0.2)
        s = [(0.5, 0.5), (1, 0)]
        ctx = UtilityContext(verts, [], h)
        _, post = gp_posterior(s, np.zeros(2), verts, h)
        ref = gaussian_entropy(cov_matrix(verts, verts, h)) - gaussian_entropy(post)
        assert mi_gain(ctx, s) == pytest.approx(ref, abs=1e-9)
        assert ctx.prior_entropy == pytest.approx(gaussian_entropy(cov_matrix(verts, verts, h)), abs=1e-9)

    def test_pilot_empty_equals_mi(self):
        verts = [(0, 0), (2, 0)]
        h = Hyperparameters(1, 1, 0.1)
        ctx = UtilityContext(verts, [], h)
        assert path_utility(ctx, [(1, 0)]) == mi_gain(ctx, [(1, 0)])

    def test_pilot_conditioning(self):
        verts = [(0, 0), (2, 0), (4, 0)]
        h = Hyperparameters(1, 1, 0.1)
        ctx = UtilityContext(verts, [(4, 0)], h)
        assert pilot_utility(ctx) == pytest.approx(dense_mi(verts, [(4, 0)], h), abs=1e-9)
        assert path_utility(ctx, [(0, 0)]) == pytest.approx(dense_mi(verts, [(0, 0), (4, 0)], h), abs=1e-9)

    def test_samples_at_pilot_locations(self):
        # duplicate noisy observations are kept, so the increment is the
        # value of a second reading, matched against the dense formula
        verts = [(0, 0), (2, 0)]
        h = Hyperparameters(1, 1, 0.1)
        ctx = UtilityContext(verts, [(0, 0)], h)
        gain = path_utility(ctx, [(0, 0)]) - pilot_utility(ctx)
        ref = dense_mi(verts, [(0, 0), (0, 0)], h) - dense_mi(verts, [(0, 0)], h)
        assert gain == pytest.approx(ref, abs=1e-9)
        assert 0 < gain < 0.5 * math.log(2) + 1e-9

    def test_vertex_duplicates_merged(self):
        ctx = UtilityContext([(0, 0), (0, 0), (1, 0)], [], Hyperparameters(1, 1, 0.1))
        assert len(ctx.vertex_points) == 2

    def test_needs_vertices(self):
        with pytest.raises(ValidationError):
            UtilityContext([], [], Hyperparameters(1, 1, 0.1))

    @given(st.lists(point, min_size=1, max_size=8), st.lists(point, max_size=8), st.lists(point, max_size=6), hypers)
    def test_nonnegative_and_monotone(self, verts, samples, extra, h):
        ctx = UtilityContext(verts, [], h)
        a = mi_gain(ctx, samples)
        b = mi_gain(ctx, samples + extra)
        assert a >= -1e-9
        assert b >= a - 1e-9


class TestLikelihood:
    def test_single_observation(self):
        h = Hyperparameters(2, 1, 0.5, -60)
        lml = log_marginal_likelihood([(0, 0)], [-60.0], h)
        assert lml == pytest.approx(-0.5 * math.log(2 * math.pi * 4.25), abs=1e-12)

    def test_translation_invariance(self, np_rng):
        x = np_rng.uniform(0, 5, (6, 2))
        y = np_rng.normal(-60, 3, 6)
        h = Hyperparameters(2, 1.5, 0.5, -60)
        h2 = Hyperparameters(2, 1.5, 0.5, -50)
        assert log_marginal_likelihood(x, y, h) == pytest.approx(log_marginal_likelihood(x, y + 10, h2), abs=1e-10)

    def test_three_points_dense(self):
        x = [(0, 0), (1, 0), (0, 2)]
        y = [-50.0, -52.0, -49.0]
        h = Hyperparameters(1.5, 2.0, 0.3, -51.0)
        k = cov_matrix(x, x, h) + 0.09 * np.eye(3)
        ref = multivariate_normal(mean=[-51.0] * 3, cov=k).logpdf(y)
        assert log_marginal_likelihood(x, y, h) == pytest.approx(ref, abs=1e-10)

    @given(st.integers(0, 10_000))
    def test_gradient_secant(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 4, (5, 2))
        y = rng.normal(0, 1.5, 5)
        theta = np.log([rng.uniform(0.5, 2), rng.uniform(0.5, 3), rng.uniform(0.2, 1)])

        def f(t):
            return log_marginal_likelihood(x, y, Hyperparameters(*np.exp(t), 0.0))

        _, grad = log_marginal_likelihood(x, y, Hyperparameters(*np.exp(theta), 0.0), eval_gradient=True)
        eps = 1e-6
        for i in range(3):
            d = np.zeros(3)
            d[i] = eps
            secant = (f(theta + d) - f(theta - d)) / (2 * eps)
            assert grad[i] == pytest.approx(secant, rel=1e-4, abs=1e-7)


class TestFit:
    @staticmethod
    def _synthetic(seed):
        truth = Hyperparameters(2.0, 3.0, 0.5, -50.0)
        x = np.array([(i, j) for i in range(10) for j in range(10)], float)
        k = cov_matrix(x, x, truth) + 0.25 * np.eye(100)
        y = -50.0 + np.linalg.cholesky(k) @ np.random.default_rng(seed).standard_normal(100)
        return x, y

    def test_recovers_length_scale(self):
        x, y = self._synthetic(0)
        h = fit_hyperparameters(x, y, seed=0)
        assert 1.5 <= h.length_scale <= 6.0
        assert h.mean_const == pytest.approx(np.mean(y))

    def test_constant_field(self):
        x = [(i, 0) for i in range(8)]
        h = fit_hyperparameters(x, [-60.0] * 8)
        assert h.sigma_f < 0.01

    def test_never_worse_than_init(self, np_rng):
        x = np_rng.uniform(0, 6, (12, 2))
        y = np_rng.normal(-55, 3, 12)
        init = fit_hyperparameters(x, y, seed=1)
        again = fit_hyperparameters(x, y, init=init, seed=2)
        assert log_marginal_likelihood(x, y, again) >= log_marginal_likelihood(x, y, init) - 1e-9

    def test_deterministic(self, np_rng):
        x = np_rng.uniform(0, 6, (10, 2))
        y = np_rng.normal(-55, 3, 10)
        assert fit_hyperparameters(x, y, seed=4) == fit_hyperparameters(x, y, seed=4)

    def test_within_bounds(self, np_rng):
        x = np_rng.uniform(0, 6, (10, 2))
        h = fit_hyperparameters(x, np_rng.normal(-55, 3, 10))
        assert 0.1 <= h.length_scale <= 100 and 1e-3 <= h.sigma_f <= 1e3 and 1e-3 <= h.sigma_n <= 1e3

    def test_too_few(self):
        with pytest.raises(ValidationError):
            fit_hyperparameters([(0, 0)] * 4, [1, 2, 3, 4])
