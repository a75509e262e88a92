"""Undirected area graphs, walks with revisits, and arc-length sampling."""

from __future__ import annotations

import heapq
import json
import math
from typing import Iterable, Mapping, Sequence

import jsonschema
import numpy as np

from .errors import ValidationError

# Comparisons of accumulated float path lengths.
EPS = 1e-9

GRAPH_SCHEMA = {
    "type": "object",
    "required": ["vertices", "edges"],
    "properties": {
        "vertices": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "x", "y"],
                "properties": {
                    "id": {"type": "integer"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["u", "v"],
                "properties": {
                    "u": {"type": "integer"},
                    "v": {"type": "integer"},
                    "length": {"type": ["number", "null"]},
                },
            },
        },
    },
}

Path = tuple  # ordered vertex ids, revisits allowed


class AreaGraph:
    """Immutable undirected graph with metric vertex coordinates.

    Edge lengths default to the Euclidean distance between the endpoints;
    explicit lengths may not be shorter than that distance.
    """

    def __init__(self, vertices: Mapping[int, Sequence[float]], edges: Iterable[Sequence]):
        if not vertices:
            raise ValidationError("graph needs at least one vertex")
        self._coords = {}
        for vid, xy in vertices.items():
            x, y = float(xy[0]), float(xy[1])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValidationError(f"vertex {vid} has non-finite coordinates")
            self._coords[int(vid)] = (x, y)
        self._adj: dict[int, dict[int, float]] = {v: {} for v in self._coords}
        for e in edges:
            u, v = int(e[0]), int(e[1])
            length = e[2] if len(e) > 2 else None
            if u not in self._coords or v not in self._coords:
                raise ValidationError(f"edge ({u}, {v}) references an unknown vertex")
            if u == v:
                raise ValidationError(f"self-loop at vertex {u}")
            euclid = math.dist(self._coords[u], self._coords[v])
            if length is None:
                length = euclid
            length = float(length)
            if not math.isfinite(length) or length <= 0:
                raise ValidationError(f"edge ({u}, {v}) has non-positive length {length}")
            if length < euclid - EPS:
                raise ValidationError(
                    f"edge ({u}, {v}) length {length} is shorter than the straight line {euclid}"
                )
            self._adj[u][v] = length
            self._adj[v][u] = length
        self._ids = sorted(self._coords)
        self._dist_cache: dict[int, dict[int, float]] = {}
        self._path_cache: dict[tuple[int, int], tuple] = {}

    # -- basic accessors -------------------------------------------------

    @property
    def vertex_ids(self) -> list[int]:
        return list(self._ids)

    def __contains__(self, vid) -> bool:
        return vid in self._coords

    def __len__(self) -> int:
        return len(self._ids)

    def point(self, vid: int) -> tuple[float, float]:
        return self._coords[vid]

    def points(self, ids: Iterable[int] | None = None) -> np.ndarray:
        ids = self._ids if ids is None else ids
        return np.array([self._coords[v] for v in ids], dtype=float).reshape(-1, 2)

    def neighbors(self, vid: int) -> list[int]:
        return sorted(self._adj[vid])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj.get(u, ())

    def edge_length(self, u: int, v: int) -> float:
        try:
            return self._adj[u][v]
        except KeyError:
            raise ValidationError(f"no edge between {u} and {v}") from None

    def edges(self) -> list[tuple[int, int, float]]:
        """Each undirected edge once, as (u, v, length) with u < v, sorted."""
        return [(u, v, l) for u in self._ids for v, l in sorted(self._adj[u].items()) if u < v]

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self._adj.values()) // 2

    def bounding_box(self) -> tuple[float, float, float, float]:
        pts = self.points()
        return (*pts.min(axis=0), *pts.max(axis=0))

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v, "x": self._coords[v][0], "y": self._coords[v][1]} for v in self._ids],
            "edges": [{"u": u, "v": v, "length": l} for u, v, l in self.edges()],
        }

    def to_json(self, indent: int | None = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    # -- distances -------------------------------------------------------

    def distances_from(self, source: int) -> dict[int, float]:
        """Dijkstra distances from ``source`` to every reachable vertex (cached)."""
        if source not in self._coords:
            raise ValidationError(f"unknown vertex {source}")
        cached = self._dist_cache.get(source)
        if cached is not None:
            return cached
        dist = {source: 0.0}
        heap = [(0.0, source)]
        done = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for w, l in self._adj[u].items():
                nd = d + l
                if nd < dist.get(w, math.inf):
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
        self._dist_cache[source] = dist
        return dist

    def distance(self, u: int, v: int) -> float:
        d = self.distances_from(u).get(v)
        if d is None:
            raise ValidationError(f"vertices {u} and {v} are not connected")
        return d


def load_graph(document) -> AreaGraph:
    """Build an :class:`AreaGraph` from a JSON string or already-parsed dict."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"graph document is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(document, GRAPH_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"graph document violates schema: {exc.message}") from exc
    vertices = {}
    for rec in document["vertices"]:
        if rec["id"] in vertices:
            raise ValidationError(f"duplicate vertex id {rec['id']}")
        vertices[rec["id"]] = (rec["x"], rec["y"])
    edges = [(e["u"], e["v"], e.get("length")) for e in document["edges"]]
    return AreaGraph(vertices, edges)


def read_graph(path) -> AreaGraph:
    with open(path) as fh:
        return load_graph(fh.read())


def validate_path(p: Sequence[int], g: AreaGraph) -> None:
    if len(p) == 0:
        raise ValidationError("a path needs at least one vertex")
    for v in p:
        if v not in g:
            raise ValidationError(f"path visits unknown vertex {v}")
    for a, b in zip(p, p[1:]):
        if not g.has_edge(a, b):
            raise ValidationError(f"path steps between non-adjacent vertices {a} and {b}")


def path_cost(p: Sequence[int], g: AreaGraph) -> float:
    """Total length of a walk; repeated edges count once per traversal."""
    validate_path(p, g)
    return float(sum(g.edge_length(a, b) for a, b in zip(p, p[1:])))


def sample_along_path(p: Sequence[int], g: AreaGraph, interval: float) -> np.ndarray:
    """Sample locations every ``interval`` meters of arc length from the start.

    Returns ``floor(cost / interval) + 1`` points; the terminal vertex is
    sampled only if the cost is a multiple of the interval.
    """
    if not interval > 0:
        raise ValidationError(f"sample interval must be > 0, got {interval}")
    validate_path(p, g)
    pts = g.points(p)
    seg = np.array([g.edge_length(a, b) for a, b in zip(p, p[1:])])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    n = int(math.floor(total / interval + EPS)) + 1
    s = np.minimum(np.arange(n) * interval, total)
    if len(seg) == 0:
        return pts[:1].copy()
    # segment index for each arc length; a sample exactly on a vertex takes the later segment
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[idx]) / seg[idx]
    frac = np.clip(frac, 0.0, 1.0)
    # interpolate along the straight segment in proportion to the edge length
    return pts[idx] + frac[:, None] * (pts[idx + 1] - pts[idx])


def shortest_path(g: AreaGraph, u: int, v: int) -> Path:
    """Minimum-cost walk from u to v.

    Among equally short walks the lexicographically smallest id sequence is
    returned.
    """
    cached = g._path_cache.get((u, v))
    if cached is not None:
        return cached
    to_v = g.distances_from(v)
    if u not in to_v:
        if u not in g:
            raise ValidationError(f"unknown vertex {u}")
        raise ValidationError(f"vertices {u} and {v} are not connected")
    path = [u]
    cur = u
    while cur != v:
        remaining = to_v[cur]
        for w in g.neighbors(cur):
            if w in to_v and abs(g.edge_length(cur, w) + to_v[w] - remaining) <= EPS * max(1.0, remaining):
                cur = w
                break
        else:  # pragma: no cover - guarded by Dijkstra correctness
            raise ValidationError(f"failed to trace shortest path {u}->{v}")
        path.append(cur)
    g._path_cache[(u, v)] = path = tuple(path)
    return path


def concat(*walks: Sequence[int]) -> Path:
    """Join walks that share their boundary vertices."""
    out: list[int] = []
    for w in walks:
        if not w:
            continue
        if out:
            if out[-1] != w[0]:
                raise ValidationError(f"cannot join walks at {out[-1]} and {w[0]}")
            out.extend(w[1:])
        else:
            out.extend(w)
    return tuple(out)
