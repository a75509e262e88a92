"""Radio-map evaluation pipeline.

Fit one GP per access point from survey data, synthesize fingerprints
along planned walks, localize test fingerprints by maximum likelihood over
a reference grid, and relate path utility to localization error.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import ValidationError
from .gp import (
    Hyperparameters,
    UtilityContext,
    as_points,
    cov_matrix,
    fit_hyperparameters,
    path_utility,
    robust_cholesky,
)
from .graph import AreaGraph, sample_along_path

MIN_ROWS = 5
FLOOR_DBM = -100.0


@dataclass
class SurveyDataset:
    """RSS observations: one row per (location, AP, RSS value)."""

    xy: np.ndarray
    ap: np.ndarray
    rss: np.ndarray

    def __post_init__(self):
        self.xy = as_points(self.xy)
        self.ap = np.asarray(self.ap, dtype=str).reshape(-1)
        self.rss = np.asarray(self.rss, dtype=float).reshape(-1)
        if not (len(self.xy) == len(self.ap) == len(self.rss)):
            raise ValidationError("survey columns have different lengths")
        if not np.all(np.isfinite(self.rss)):
            raise ValidationError("survey RSS values must be finite")

    def __len__(self) -> int:
        return len(self.rss)

    @property
    def aps(self) -> list[str]:
        return sorted(set(self.ap.tolist()))

    def for_ap(self, ap: str) -> tuple[np.ndarray, np.ndarray]:
        mask = self.ap == ap
        return self.xy[mask], self.rss[mask]

    def subset(self, mask) -> "SurveyDataset":
        return SurveyDataset(self.xy[mask], self.ap[mask], self.rss[mask])

    def shifted(self, offset: float) -> "SurveyDataset":
        return SurveyDataset(self.xy, self.ap, self.rss + offset)

    def locations(self) -> np.ndarray:
        """Distinct locations in order of first appearance."""
        _, first = np.unique(self.xy, axis=0, return_index=True)
        return self.xy[np.sort(first)]

    def group_by_location(self) -> list[tuple[np.ndarray, list[tuple[str, float]]]]:
        groups = []
        for loc in self.locations():
            mask = np.all(self.xy == loc, axis=1)
            groups.append((loc, list(zip(self.ap[mask].tolist(), self.rss[mask].tolist()))))
        return groups

    @classmethod
    def from_rows(cls, rows) -> "SurveyDataset":
        rows = list(rows)
        if not rows:
            return cls(np.empty((0, 2)), np.empty(0, dtype=str), np.empty(0))
        xy = [(float(r[0]), float(r[1])) for r in rows]
        return cls(xy, [str(r[2]) for r in rows], [float(r[3]) for r in rows])

    @classmethod
    def from_csv(cls, path) -> "SurveyDataset":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"x", "y", "ap", "rss"} - set(reader.fieldnames or [])
            if missing:
                raise ValidationError(f"{path}: CSV header lacks columns {sorted(missing)}")
            try:
                rows = [(r["x"], r["y"], r["ap"], r["rss"]) for r in reader]
                return cls.from_rows(rows)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: bad CSV row: {exc}") from exc

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "ap", "rss"])
            for (x, y), a, r in zip(self.xy.tolist(), self.ap.tolist(), self.rss.tolist()):
                w.writerow([repr(x), repr(y), a, repr(r)])


@dataclass
class APModel:
    """A GP conditioned on one AP's observations."""

    hyper: Hyperparameters
    xy: np.ndarray
    rss: np.ndarray

    @cached_property
    def _factor(self):
        h = self.hyper
        k = cov_matrix(self.xy, self.xy, h)
        k[np.diag_indices_from(k)] += h.sigma_n ** 2
        lower = robust_cholesky(k, h.sigma_f ** 2)
        return lower, cho_solve((lower, True), self.rss - h.mean_const)

    def predict(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and latent (noise-free) variance at each point."""
        h = self.hyper
        pts = as_points(points)
        lower, alpha = self._factor
        k_sx = cov_matrix(pts, self.xy, h)
        v = solve_triangular(lower, k_sx.T, lower=True)
        var = h.sigma_f ** 2 - np.einsum("ij,ij->j", v, v)
        return h.mean_const + k_sx @ alpha, np.maximum(var, 0.0)


@dataclass
class RadioMap:
    """Fitted per-AP GP models."""

    models: dict[str, APModel]

    @property
    def aps(self) -> list[str]:
        return sorted(self.models)

    def hypers(self) -> dict[str, Hyperparameters]:
        return {ap: self.models[ap].hyper for ap in self.aps}

    def hypers_json(self) -> str:
        return json.dumps({ap: h.to_dict() for ap, h in self.hypers().items()}, indent=1, sort_keys=True)

    @classmethod
    def from_survey(cls, data: SurveyDataset, hypers: dict[str, Hyperparameters]) -> "RadioMap":
        models = {}
        for ap, h in hypers.items():
            xy, rss = data.for_ap(ap)
            if len(rss) == 0:
                raise ValidationError(f"no survey rows for AP {ap!r}")
            models[ap] = APModel(h, xy, rss)
        return cls(models)


def fit_radio_map(
    data: SurveyDataset, seed: int = 0, min_rows: int = MIN_ROWS, n_starts: int = 5
) -> RadioMap:
    """Fit one GP per AP; APs with fewer than ``min_rows`` rows are dropped with a warning."""
    models = {}
    for k, ap in enumerate(data.aps):
        xy, rss = data.for_ap(ap)
        if len(rss) < min_rows:
            warnings.warn(f"dropping AP {ap!r}: only {len(rss)} observations", stacklevel=2)
            continue
        h = fit_hyperparameters(xy, rss, n_starts=n_starts, seed=seed + k)
        models[ap] = APModel(h, xy, rss)
    if not models:
        raise ValidationError("no AP has enough observations to fit a model")
    return RadioMap(models)


def synthesize_fingerprints(
    radio_map: RadioMap, points, seed: int = 0, noise: bool = True
) -> SurveyDataset:
    """Draw one RSS value per AP and point from the posterior predictive.

    Draws are independent across points and APs. With ``noise=False`` the
    posterior means are returned instead.
    """
    pts = as_points(points)
    if len(pts) == 0:
        raise ValidationError("synthesize_fingerprints needs at least one point")
    rng = np.random.default_rng(seed)
    xy, aps, rss = [], [], []
    for ap in radio_map.aps:
        m = radio_map.models[ap]
        mean, var = m.predict(pts)
        if noise:
            sd = np.sqrt(var + m.hyper.sigma_n ** 2)
            vals = mean + sd * rng.standard_normal(len(pts))
        else:
            vals = mean
        xy.append(pts)
        aps += [ap] * len(pts)
        rss.append(vals)
    return SurveyDataset(np.vstack(xy), np.array(aps), np.concatenate(rss))


class Localizer:
    """Maximum-likelihood localization over a fixed reference grid.

    One GP per AP is conditioned on ``train``. With ``hypers`` the kernel
    parameters are taken as given, otherwise they are fitted per AP.
    ``missing_ap`` controls APs that the model knows but the test
    fingerprint lacks: ``"skip"`` ignores them, ``"floor"`` treats them as
    heard at -100 dBm.
    """

    def __init__(
        self,
        train: SurveyDataset,
        reference_grid,
        hypers: dict[str, Hyperparameters] | None = None,
        missing_ap: str = "skip",
        seed: int = 0,
    ):
        if missing_ap not in ("skip", "floor"):
            raise ValidationError(f"unknown missing-AP policy {missing_ap!r}")
        self.grid = as_points(reference_grid)
        if len(self.grid) == 0:
            raise ValidationError("reference grid is empty")
        self.missing_ap = missing_ap
        self.mean: dict[str, np.ndarray] = {}
        self.var: dict[str, np.ndarray] = {}
        for k, ap in enumerate(train.aps):
            xy, rss = train.for_ap(ap)
            if hypers is not None:
                if ap not in hypers:
                    continue
                h = hypers[ap]
            else:
                if len(rss) < MIN_ROWS:
                    continue
                h = fit_hyperparameters(xy, rss, seed=seed + k)
            mean, var = APModel(h, xy, rss).predict(self.grid)
            self.mean[ap] = mean
            self.var[ap] = var + h.sigma_n ** 2

    def log_likelihood(self, test_obs) -> np.ndarray:
        """Log-likelihood of the fingerprint at every reference location."""
        obs = [(str(a), float(r)) for a, r in test_obs if str(a) in self.mean]
        if self.missing_ap == "floor":
            heard = {a for a, _ in obs}
            obs += [(a, FLOOR_DBM) for a in sorted(self.mean) if a not in heard]
        if not obs:
            raise ValidationError("no AP in the test fingerprint has a trained model")
        ll = np.zeros(len(self.grid))
        for ap, r in obs:
            var = self.var[ap]
            ll -= 0.5 * (np.log(2.0 * math.pi * var) + (r - self.mean[ap]) ** 2 / var)
        return ll

    def locate(self, test_obs) -> np.ndarray:
        # argmax takes the first (smallest-index) maximum
        return self.grid[int(np.argmax(self.log_likelihood(test_obs)))]


def localize(
    train: SurveyDataset,
    reference_grid,
    test_obs,
    hypers: dict[str, Hyperparameters] | None = None,
    missing_ap: str = "skip",
) -> np.ndarray:
    """Reference location most likely to have produced ``test_obs``."""
    return Localizer(train, reference_grid, hypers, missing_ap).locate(test_obs)


def reference_grid(graph: AreaGraph, spacing: float = 1.0, max_offset: float = 0.5) -> np.ndarray:
    """Regular grid over the bounding box, kept only within ``max_offset`` of an edge."""
    x0, y0, x1, y1 = graph.bounding_box()
    xs = np.arange(x0, x1 + 1e-9, spacing)
    ys = np.arange(y0, y1 + 1e-9, spacing)
    grid = np.array([(x, y) for y in ys for x in xs])
    segs = [(graph.point(u), graph.point(v)) for u, v, _ in graph.edges()]
    if not segs:
        segs = [(graph.point(v), graph.point(v)) for v in graph.vertex_ids]
    a = np.array([s[0] for s in segs])
    b = np.array([s[1] for s in segs])
    ab = b - a
    denom = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
    ap = grid[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", ap, ab) / denom, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    d = np.linalg.norm(grid[:, None, :] - closest, axis=2).min(axis=1)
    return grid[d <= max_offset + 1e-9]


@dataclass
class LocalizationReport:
    true: np.ndarray
    predicted: np.ndarray
    errors: np.ndarray = field(init=False)

    def __post_init__(self):
        self.true = as_points(self.true)
        self.predicted = as_points(self.predicted)
        self.errors = np.linalg.norm(self.true - self.predicted, axis=1)

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    def to_dict(self) -> dict:
        return {
            "mean_error": self.mean_error,
            "points": [
                {"true": list(map(float, t)), "pred": list(map(float, p)), "error": float(e)}
                for t, p, e in zip(self.true, self.predicted, self.errors)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def make_test_set(radio_map: RadioMap, points, scans: int = 1, seed: int = 0, noise: bool = True) -> SurveyDataset:
    """Test fingerprints: ``scans`` synthetic scans at each test location."""
    pts = np.repeat(as_points(points), scans, axis=0)
    return synthesize_fingerprints(radio_map, pts, seed=seed, noise=noise)


def evaluate_walk_error(
    walk,
    graph: AreaGraph,
    radio_map: RadioMap,
    grid,
    test_set: SurveyDataset,
    interval: float = 0.5,
    seed: int = 0,
    refit: bool = False,
    missing_ap: str = "skip",
) -> LocalizationReport:
    """Train on fingerprints synthesized along ``walk`` and localize every test location."""
    if len(test_set) == 0:
        raise ValidationError("test set is empty")
    pts = sample_along_path(walk, graph, interval)
    train = synthesize_fingerprints(radio_map, pts, seed=seed)
    hypers = None if refit else radio_map.hypers()
    loc = Localizer(train, grid, hypers, missing_ap, seed=seed)
    true, pred = [], []
    for where, obs in test_set.group_by_location():
        true.append(where)
        pred.append(loc.locate(obs))
    return LocalizationReport(np.array(true), np.array(pred))


def evaluate_plan_error(plan, radio_map: RadioMap, grid, test_set: SurveyDataset, graph: AreaGraph,
                        interval: float = 0.5, seed: int = 0, **kwargs) -> LocalizationReport:
    """:func:`evaluate_walk_error` for a :class:`~sitesurvey.planners.PlanResult`."""
    return evaluate_walk_error(plan.path, graph, radio_map, grid, test_set, interval, seed, **kwargs)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 2:
        raise ValidationError("pearson needs two equally long series of length >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(float(dx @ dx)), math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise ValidationError("correlation is undefined for a constant series")
    return float(np.clip((dx @ dy) / (sx * sy), -1.0, 1.0))


def utility_error_series(
    paths,
    graph: AreaGraph,
    ctx: UtilityContext,
    radio_map: RadioMap,
    grid,
    test_set: SurveyDataset,
    interval: float = 0.5,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """(utility, mean localization error) for each walk."""
    utils, errs = [], []
    for k, p in enumerate(paths):
        utils.append(path_utility(ctx, sample_along_path(p, graph, interval)))
        rep = evaluate_walk_error(p, graph, radio_map, grid, test_set, interval, seed=seed + k)
        errs.append(rep.mean_error)
    return np.array(utils), np.array(errs)


def utility_error_correlation(paths, graph, ctx, radio_map, grid, test_set, interval=0.5, seed=0) -> float:
    """Pearson correlation between path utility and mean localization error."""
    if len(paths) < 10:
        raise ValidationError(f"need at least 10 paths, got {len(paths)}")
    utils, errs = utility_error_series(paths, graph, ctx, radio_map, grid, test_set, interval, seed)
    return pearson(utils, errs)
