"""Gaussian-process machinery for RSS fields.

Exponential kernel, exact posterior inference, Gaussian differential
entropy and the mutual-information utility of a set of sample locations.
Everything works in natural-log units (nats).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import NumericalError, ValidationError

LOG_2PI = math.log(2.0 * math.pi)

# Jitter is expressed relative to sigma_f**2.
JITTER_START = 1e-8
JITTER_MAX = 1e-2

LENGTH_BOUNDS = (0.1, 100.0)
SIGMA_BOUNDS = (1e-3, 1e3)


@dataclass(frozen=True)
class Hyperparameters:
    """Parameters of one GP field (one access point).

    sigma_f and sigma_n are in dBm, length_scale in meters and mean_const
    is the constant prior mean in dBm.
    """

    sigma_f: float
    length_scale: float
    sigma_n: float
    mean_const: float = 0.0

    def __post_init__(self):
        vals = (self.sigma_f, self.length_scale, self.sigma_n, self.mean_const)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite hyperparameters: {self}")
        if self.sigma_f <= 0:
            raise ValidationError(f"sigma_f must be > 0, got {self.sigma_f}")
        if self.length_scale <= 0:
            raise ValidationError(f"length_scale must be > 0, got {self.length_scale}")
        if self.sigma_n < 0:
            raise ValidationError(f"sigma_n must be >= 0, got {self.sigma_n}")

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparameters":
        try:
            return cls(
                sigma_f=float(d["sigma_f"]),
                length_scale=float(d["length_scale"]),
                sigma_n=float(d["sigma_n"]),
                mean_const=float(d.get("mean_const", 0.0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad hyperparameter document: {d!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Hyperparameters":
        return cls.from_dict(json.loads(text))


def as_points(points) -> np.ndarray:
    """Coerce a sequence of (x, y) pairs into a float array of shape (n, 2)."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError(f"expected points of shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("points must have finite coordinates")
    return arr


def _pairwise_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def kernel_eval(p, q, h: Hyperparameters) -> float:
    """Exponential covariance between two locations."""
    d = math.hypot(p[0] - q[0], p[1] - q[1])
    return h.sigma_f ** 2 * math.exp(-d / h.length_scale)


def cov_matrix(a, b, h: Hyperparameters) -> np.ndarray:
    """Cross-covariance matrix K(A, B)."""
    a = as_points(a)
    b = as_points(b)
    if len(a) == 0 or len(b) == 0:
        raise ValidationError("cov_matrix needs non-empty point lists")
    return h.sigma_f ** 2 * np.exp(-_pairwise_dist(a, b) / h.length_scale)


def robust_cholesky(k: np.ndarray, scale: float = 1.0, jitter: float = JITTER_START) -> np.ndarray:
    """Lower Cholesky factor of ``k``, regularizing only when needed.

    The plain factorization is attempted first. On failure a diagonal jitter
    of ``jitter * scale`` is added and escalated tenfold up to ``1e-2 * scale``.
    """
    try:
        return np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(len(k))
    while jitter <= JITTER_MAX * (1 + 1e-12):
        try:
            return np.linalg.cholesky(k + jitter * scale * eye)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(
        f"Cholesky failed for a {len(k)}x{len(k)} matrix even with jitter {JITTER_MAX}*{scale}"
    )


def _logdet_chol(lower: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


def gp_posterior(train, y, test, h: Hyperparameters):
    """Posterior mean and covariance of the field at ``test``.

    Observations at ``train`` carry i.i.d. noise of variance sigma_n**2.
    Returns ``(mean, cov)`` with shapes (m,) and (m, m).
    """
    x = as_points(train)
    xs = as_points(test)
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0 or len(x) != len(y):
        raise ValidationError("gp_posterior needs |train| == |y| > 0")
    if len(xs) == 0:
        raise ValidationError("gp_posterior needs a non-empty test set")

    k_xx = cov_matrix(x, x, h) + h.sigma_n ** 2 * np.eye(len(x))
    k_sx = cov_matrix(xs, x, h)
    lower = robust_cholesky(k_xx, h.sigma_f ** 2)
    alpha = cho_solve((lower, True), y - h.mean_const)
    mean = h.mean_const + k_sx @ alpha
    v = solve_triangular(lower, k_sx.T, lower=True)
    cov = cov_matrix(xs, xs, h) - v.T @ v
    return mean, 0.5 * (cov + cov.T)


def gp_predict_diag(train, y, test, h: Hyperparameters):
    """Like :func:`gp_posterior` but only returns the marginal variances."""
    x = as_points(train)
    xs = as_points(test)
    y = np.asarray(y, dtype=float).ravel()
    k_xx = cov_matrix(x, x, h) + h.sigma_n ** 2 * np.eye(len(x))
    k_sx = cov_matrix(xs, x, h)
    lower = robust_cholesky(k_xx, h.sigma_f ** 2)
    alpha = cho_solve((lower, True), y - h.mean_const)
    mean = h.mean_const + k_sx @ alpha
    v = solve_triangular(lower, k_sx.T, lower=True)
    var = h.sigma_f ** 2 - np.einsum("ij,ij->j", v, v)
    return mean, np.maximum(var, 0.0)


def gaussian_entropy(cov) -> float:
    """Differential entropy of a multivariate Gaussian with covariance ``cov``."""
    c = np.atleast_2d(np.asarray(cov, dtype=float))
    d = c.shape[0]
    try:
        lower = np.linalg.cholesky(c)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance matrix is not positive definite") from exc
    return 0.5 * _logdet_chol(lower) + 0.5 * d * (1.0 + LOG_2PI)


@dataclass
class UtilityContext:
    """Fixed part of the path utility: the vertex field y_V and pilot data D."""

    vertex_points: np.ndarray
    pilot_points: np.ndarray
    hyper: Hyperparameters
    jitter: float = JITTER_START

    def __post_init__(self):
        v = as_points(self.vertex_points)
        if len(v) == 0:
            raise ValidationError("UtilityContext needs at least one vertex point")
        # only exact coordinate duplicates are merged
        self.vertex_points = np.unique(v, axis=0)
        self.pilot_points = as_points(self.pilot_points)

    @cached_property
    def _prior(self):
        h = self.hyper
        k_vv = cov_matrix(self.vertex_points, self.vertex_points, h)
        lower = robust_cholesky(k_vv, h.sigma_f ** 2, self.jitter)
        return k_vv, _logdet_chol(lower)

    @property
    def prior_entropy(self) -> float:
        d = len(self.vertex_points)
        return 0.5 * self._prior[1] + 0.5 * d * (1.0 + LOG_2PI)

    def conditional_logdet(self, cond_points: np.ndarray) -> float:
        """log|Cov(y_V | observations at cond_points)|."""
        h = self.hyper
        k_vv, logdet_prior = self._prior
        if len(cond_points) == 0:
            return logdet_prior
        k_ss = cov_matrix(cond_points, cond_points, h)
        k_ss[np.diag_indices_from(k_ss)] += h.sigma_n ** 2
        l_s = robust_cholesky(k_ss, h.sigma_f ** 2)
        w = solve_triangular(l_s, cov_matrix(cond_points, self.vertex_points, h), lower=True)
        post = k_vv - w.T @ w
        post = 0.5 * (post + post.T)
        return _logdet_chol(robust_cholesky(post, h.sigma_f ** 2, self.jitter))


def mi_gain(ctx: UtilityContext, sample_points) -> float:
    """MI between the vertex field and noisy observations at samples plus pilots.

    Returns H(y_V) - H(y_V | y_R, D) in nats.
    """
    s = as_points(sample_points)
    cond = np.vstack([s, ctx.pilot_points]) if len(ctx.pilot_points) else s
    if len(cond) == 0:
        return 0.0
    return 0.5 * (ctx._prior[1] - ctx.conditional_logdet(cond))


def path_utility(ctx: UtilityContext, sample_points) -> float:
    """f_D of a walk, given the points sampled along it."""
    return mi_gain(ctx, sample_points)


def pilot_utility(ctx: UtilityContext) -> float:
    """Information already provided by the pilot data alone."""
    return mi_gain(ctx, np.empty((0, 2)))


def log_marginal_likelihood(train, y, h: Hyperparameters, eval_gradient: bool = False):
    """Gaussian log marginal likelihood of ``y`` under ``h``.

    With ``eval_gradient`` the gradient with respect to
    (log sigma_f, log length_scale, log sigma_n) is returned as well.
    """
    x = as_points(train)
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if n == 0 or len(x) != n:
        raise ValidationError("log_marginal_likelihood needs |train| == |y| > 0")
    dist = _pairwise_dist(x, x)
    e = np.exp(-dist / h.length_scale)
    k = h.sigma_f ** 2 * e + h.sigma_n ** 2 * np.eye(n)
    lower = robust_cholesky(k, h.sigma_f ** 2)
    r = y - h.mean_const
    alpha = cho_solve((lower, True), r)
    lml = -0.5 * float(r @ alpha) - 0.5 * _logdet_chol(lower) - 0.5 * n * LOG_2PI
    if not eval_gradient:
        return lml
    inner = np.outer(alpha, alpha) - cho_solve((lower, True), np.eye(n))
    grads = (
        2.0 * h.sigma_f ** 2 * e,
        h.sigma_f ** 2 * e * dist / h.length_scale,
        2.0 * h.sigma_n ** 2 * np.eye(n),
    )
    grad = np.array([0.5 * float(np.sum(inner * dk)) for dk in grads])
    return lml, grad


_LOG_LOWER = np.log([SIGMA_BOUNDS[0], LENGTH_BOUNDS[0], SIGMA_BOUNDS[0]])
_LOG_UPPER = np.log([SIGMA_BOUNDS[1], LENGTH_BOUNDS[1], SIGMA_BOUNDS[1]])


def _unpack(theta, mean_const) -> Hyperparameters:
    sf, ls, sn = np.exp(np.clip(theta, _LOG_LOWER, _LOG_UPPER))
    return Hyperparameters(float(sf), float(ls), float(sn), mean_const)


def fit_hyperparameters(
    train,
    y,
    init: Hyperparameters | None = None,
    n_starts: int = 5,
    seed: int = 0,
    maxiter: int = 400,
) -> Hyperparameters:
    """Maximum-likelihood kernel parameters from a small dataset.

    Nelder-Mead in log-parameter space from ``init`` plus ``n_starts``
    random starts scaled to the data. The mean is fixed at the empirical
    mean of ``y``. The result never has lower likelihood than ``init``.
    """
    x = as_points(train)
    y = np.asarray(y, dtype=float).ravel()
    if len(y) < 5 or len(x) != len(y):
        raise ValidationError(f"need at least 5 observations to fit, got {len(y)}")
    mean = float(np.mean(y))
    spread = float(np.std(y)) or 1.0
    extent = float(np.ptp(x, axis=0).max()) if len(x) > 1 else 1.0
    extent = max(extent, 1.0)

    if init is None:
        init = Hyperparameters(spread, extent / 4.0, 0.1 * spread, mean)
    rng = np.random.default_rng(seed)
    starts = [np.log([init.sigma_f, init.length_scale, max(init.sigma_n, SIGMA_BOUNDS[0])])]
    for _ in range(n_starts):
        starts.append(
            np.log([spread, extent / 4.0, 0.1 * spread]) + rng.uniform(-1.5, 1.5, size=3)
        )

    def objective(theta):
        try:
            return -log_marginal_likelihood(x, y, _unpack(theta, mean))
        except NumericalError:
            return np.inf

    bounds = list(zip(_LOG_LOWER, _LOG_UPPER))
    best_theta, best_val = None, np.inf
    for start in starts:
        start = np.clip(start, _LOG_LOWER, _LOG_UPPER)
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": maxiter, "xatol": 1e-6, "fatol": 1e-9},
        )
        if np.isfinite(res.fun) and res.fun < best_val:
            best_theta, best_val = res.x, res.fun
    if best_theta is None:
        raise NumericalError("hyperparameter fit failed from every start")

    fitted = _unpack(best_theta, mean)
    try:
        init_lml = log_marginal_likelihood(x, y, init)
    except NumericalError:
        return fitted
    if -best_val < init_lml:
        return init
    return fitted
