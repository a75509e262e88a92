"""Bundled demo areas and a synthetic WiFi survey generator.

The demo graphs echo the scale of the two measured areas (a 27-vertex
room-sized grid and a 61-vertex corridor) plus small 3x3 and 4x4 grids.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path as FsPath

import numpy as np

from .gp import Hyperparameters, cov_matrix, robust_cholesky
from .graph import AreaGraph, load_graph, sample_along_path
from .radio import SurveyDataset

DEMO_GRAPHS = ("grid3", "grid4", "area_one", "corridor")


def grid_graph(rows: int, cols: int, spacing: float = 1.0) -> AreaGraph:
    """Rectangular grid, ids row-major from the origin corner."""
    verts = {r * cols + c: (c * spacing, r * spacing) for r in range(rows) for c in range(cols)}
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return AreaGraph(verts, edges)


def area_one_graph() -> AreaGraph:
    """27 vertices on a 3 m grid over a 12 m x 15 m room with three blocked cells."""
    blocked = {(1, 2), (3, 2), (2, 4)}  # (col, row)
    cells = [(c, r) for r in range(6) for c in range(5) if (c, r) not in blocked]
    ids = {cell: i for i, cell in enumerate(cells)}
    verts = {i: (3.0 * c, 3.0 * r) for (c, r), i in ids.items()}
    edges = []
    for (c, r), i in ids.items():
        for nb in ((c + 1, r), (c, r + 1)):
            if nb in ids:
                edges.append((i, ids[nb]))
    return AreaGraph(verts, edges)


def corridor_graph() -> AreaGraph:
    """61 vertices: a two-lane ladder 63 m long plus a door stub."""
    step = 63.0 / 29
    verts = {}
    edges = []
    for k in range(30):
        verts[k] = (k * step, 0.0)
        verts[30 + k] = (k * step, 2.0)
        edges.append((k, 30 + k))
        if k:
            edges += [(k - 1, k), (29 + k, 30 + k)]
    verts[60] = (15 * step, 4.0)
    edges.append((45, 60))
    return AreaGraph(verts, edges)


def build_graph(name: str) -> AreaGraph:
    if name == "grid3":
        return grid_graph(3, 3)
    if name == "grid4":
        return grid_graph(4, 4)
    if name == "area_one":
        return area_one_graph()
    if name == "corridor":
        return corridor_graph()
    raise KeyError(f"unknown demo graph {name!r}; choose from {DEMO_GRAPHS}")


def demo_graph(name: str) -> AreaGraph:
    """Load a bundled demo graph from package data."""
    text = resources.files("sitesurvey").joinpath("data", f"{name}.json").read_text()
    return load_graph(text)


def demo_file(name: str) -> FsPath:
    return FsPath(str(resources.files("sitesurvey").joinpath("data", name)))


def access_points(graph: AreaGraph, n_aps: int, seed: int = 0) -> np.ndarray:
    """AP positions scattered around (and slightly outside) the graph's bounding box."""
    x0, y0, x1, y1 = graph.bounding_box()
    rng = np.random.default_rng(seed)
    pad = 0.25 * max(x1 - x0, y1 - y0, 1.0)
    return np.column_stack(
        [rng.uniform(x0 - pad, x1 + pad, n_aps), rng.uniform(y0 - pad, y1 + pad, n_aps)]
    )


def path_loss_rss(points, ap_xy, tx_power=-30.0, exponent=3.0) -> np.ndarray:
    """Log-distance mean RSS in dBm (1 m reference)."""
    d = np.maximum(np.linalg.norm(np.asarray(points) - ap_xy, axis=1), 1.0)
    return tx_power - 10.0 * exponent * np.log10(d)


def synthetic_survey(
    graph: AreaGraph,
    n_aps: int = 6,
    seed: int = 0,
    interval: float = 0.5,
    noise_db: float = 2.0,
    shadow_db: float = 4.0,
    shadow_length: float = 3.0,
) -> SurveyDataset:
    """Exhaustive synthetic survey along every edge of ``graph``.

    RSS per AP = log-distance path loss + spatially correlated shadowing
    (exponential-kernel GP draw) + i.i.d. measurement noise.
    """
    rng = np.random.default_rng(seed)
    pts = [graph.points([v]) for v in graph.vertex_ids]
    for u, v, _ in graph.edges():
        pts.append(sample_along_path((u, v), graph, interval)[1:-1])
    pts = np.unique(np.vstack(pts).round(9), axis=0)
    aps = access_points(graph, n_aps, seed)

    shadow_h = Hyperparameters(shadow_db, shadow_length, 0.0)
    chol = robust_cholesky(cov_matrix(pts, pts, shadow_h), shadow_db ** 2)
    rows_xy, rows_ap, rows_rss = [], [], []
    for k, ap in enumerate(aps):
        field = path_loss_rss(pts, ap) + chol @ rng.standard_normal(len(pts))
        rss = field + noise_db * rng.standard_normal(len(pts))
        rows_xy.append(pts)
        rows_ap += [f"ap{k}"] * len(pts)
        rows_rss.append(rss)
    return SurveyDataset(np.vstack(rows_xy), np.array(rows_ap), np.concatenate(rows_rss))


def pilot_subset(survey: SurveyDataset, n_locations: int, seed: int = 0) -> SurveyDataset:
    """All observations at ``n_locations`` randomly chosen surveyed locations."""
    locs = np.unique(survey.xy, axis=0)
    rng = np.random.default_rng(seed)
    pick = locs[np.sort(rng.choice(len(locs), size=min(n_locations, len(locs)), replace=False))]
    mask = np.zeros(len(survey), dtype=bool)
    for p in pick:
        mask |= np.all(survey.xy == p, axis=1)
    return survey.subset(mask)


DEMO_HYPER = Hyperparameters(sigma_f=1.0, length_scale=1.0, sigma_n=0.1, mean_const=0.0)


def write_demo_assets(out_dir) -> list[FsPath]:
    """Write each demo graph with its synthetic survey, a pilot subset, and unit hyperparameters."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, name in enumerate(DEMO_GRAPHS):
        g = build_graph(name)
        p = out / f"{name}.json"
        p.write_text(g.to_json() + "\n")
        written.append(p)
        survey = synthetic_survey(g, n_aps=6, seed=i)
        p = out / f"{name}_survey.csv"
        survey.to_csv(p)
        written.append(p)
        n_pilot = {"grid3": 4, "grid4": 6, "area_one": 20, "corridor": 30}[name]
        p = out / f"{name}_pilot.csv"
        pilot_subset(survey, n_pilot, seed=i).to_csv(p)
        written.append(p)
    p = out / "hyper_unit.json"
    p.write_text(json.dumps(DEMO_HYPER.to_dict(), indent=1, sort_keys=True) + "\n")
    written.append(p)
    return written
