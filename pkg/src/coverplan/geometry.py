"""
Planar geometry primitives shared by the planners.

Points are plain ``(x, y)`` pairs in meters; batches of points are ``(n, 2)``
float arrays. Polygons are implicitly closed vertex rings.

Boundary convention: a point lying on a polygon edge counts as inside. This
is applied consistently by every containment and intersection test here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

Point2 = Tuple[float, float]

# Relative tolerance (scaled by polygon extent) for on-edge tests.
_EDGE_EPS = 1e-12


class GeometryError(ValueError):
    """Invalid geometric input (degenerate polygon, bad radius, ...)."""


def as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"expected (n, 2) coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("coordinates must be finite")
    return arr


def signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _has_proper_crossing(vertices: np.ndarray) -> bool:
    """True if two non-adjacent edges of the ring properly cross."""
    n = len(vertices)
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    for i in range(n - 2):
        # edges i+2 .. n-1, skipping the edge adjacent to i through the ring closure
        stop = n if i > 0 else n - 1
        j = np.arange(i + 2, stop)
        if j.size == 0:
            continue
        p, q = a[i], b[i]
        r, s = a[j], b[j]
        d1 = _cross(p[0], p[1], q[0], q[1], r[:, 0], r[:, 1])
        d2 = _cross(p[0], p[1], q[0], q[1], s[:, 0], s[:, 1])
        d3 = _cross(r[:, 0], r[:, 1], s[:, 0], s[:, 1], p[0], p[1])
        d4 = _cross(r[:, 0], r[:, 1], s[:, 0], s[:, 1], q[0], q[1])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by an implicitly closed vertex ring.

    Touching rings (a vertex revisited, as produced by raster contours around
    diagonal pinches) are accepted; properly crossing edges are not.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = as_points(self.vertices)
        if len(v) >= 2 and np.allclose(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if signed_area(v) == 0.0:
            raise GeometryError("polygon has zero area")
        if _has_proper_crossing(v):
            raise GeometryError("polygon is self-intersecting")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def area(self) -> float:
        return abs(signed_area(self.vertices))

    @property
    def signed_area(self) -> float:
        return signed_area(self.vertices)

    @property
    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def ccw(self) -> "Polygon":
        if self.signed_area > 0:
            return self
        return Polygon(self.vertices[::-1])

    def to_list(self) -> List[List[float]]:
        return [[float(x), float(y)] for x, y in self.vertices]

    def _eps(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return _EDGE_EPS * max(1.0, x1 - x0, y1 - y0)


def point_segment_distance(points, a, b) -> np.ndarray:
    """Distance from each point to the closed segment ab."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(p[:, 0] - a[0], p[:, 1] - a[1])
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    cx = a[0] + t * ab[0]
    cy = a[1] + t * ab[1]
    return np.hypot(p[:, 0] - cx, p[:, 1] - cy)


def distance_to_boundary(points, poly: Polygon) -> np.ndarray:
    """Unsigned distance from each point to the polygon's edge ring."""
    p = as_points(points)
    out = np.full(len(p), np.inf)
    for a, b in zip(*poly.edges):
        np.minimum(out, point_segment_distance(p, a, b), out=out)
    return out


def points_in_polygon(points, poly: Polygon) -> np.ndarray:
    """Vectorized containment (crossing number); on-edge points are inside."""
    p = as_points(points)
    px, py = p[:, 0], p[:, 1]
    inside = np.zeros(len(p), dtype=bool)
    on_edge = np.zeros(len(p), dtype=bool)
    eps = poly._eps()
    for a, b in zip(*poly.edges):
        (ax, ay), (bx, by) = a, b
        straddle = (ay > py) != (by > py)
        if np.any(straddle):
            xs = ax + (py[straddle] - ay) * (bx - ax) / (by - ay)
            hit = np.zeros(len(p), dtype=bool)
            hit[straddle] = px[straddle] < xs
            inside ^= hit
        on_edge |= point_segment_distance(p, a, b) <= eps
    return inside | on_edge


def point_in_polygon(p: Point2, poly: Polygon) -> bool:
    """Whether ``p`` lies inside ``poly`` (edges count as inside)."""
    if not isinstance(poly, Polygon):
        raise GeometryError("point_in_polygon expects a Polygon")
    return bool(points_in_polygon([p], poly)[0])


def points_polygon_distance(points, poly: Polygon) -> np.ndarray:
    """Distance to the polygon as a closed region (zero inside)."""
    p = as_points(points)
    d = distance_to_boundary(p, poly)
    d[points_in_polygon(p, poly)] = 0.0
    return d


def _segments_cross(ax, ay, bx, by, cx, cy, dx, dy, eps):
    """Closed-segment intersection test for segment batches ab vs one segment cd."""
    d1 = _cross(cx, cy, dx, dy, ax, ay)
    d2 = _cross(cx, cy, dx, dy, bx, by)
    d3 = _cross(ax, ay, bx, by, cx, cy)
    d4 = _cross(ax, ay, bx, by, dx, dy)
    proper = ((d1 > eps) & (d2 < -eps) | (d1 < -eps) & (d2 > eps)) & (
        (d3 > eps) & (d4 < -eps) | (d3 < -eps) & (d4 > eps)
    )

    def on_seg(px, py, qx, qy, rx, ry, d):
        # r collinear with pq and within its bbox
        return (
            (np.abs(d) <= eps)
            & (np.minimum(px, qx) - eps <= rx)
            & (rx <= np.maximum(px, qx) + eps)
            & (np.minimum(py, qy) - eps <= ry)
            & (ry <= np.maximum(py, qy) + eps)
        )

    touch = (
        on_seg(cx, cy, dx, dy, ax, ay, d1)
        | on_seg(cx, cy, dx, dy, bx, by, d2)
        | on_seg(ax, ay, bx, by, cx, cy, d3)
        | on_seg(ax, ay, bx, by, dx, dy, d4)
    )
    return proper | touch


def segments_intersect_polygon(a, b, poly: Polygon) -> np.ndarray:
    """Vectorized :func:`segment_intersects_polygon` for segment batches."""
    a = as_points(a)
    b = as_points(b)
    x0, y0, x1, y1 = poly.bbox
    eps = poly._eps()
    result = np.zeros(len(a), dtype=bool)
    # cheap rejection: both endpoints beyond the same side of the bbox
    cand = ~(
        ((a[:, 0] < x0 - eps) & (b[:, 0] < x0 - eps))
        | ((a[:, 0] > x1 + eps) & (b[:, 0] > x1 + eps))
        | ((a[:, 1] < y0 - eps) & (b[:, 1] < y0 - eps))
        | ((a[:, 1] > y1 + eps) & (b[:, 1] > y1 + eps))
    )
    idx = np.flatnonzero(cand)
    if idx.size == 0:
        return result
    sa, sb = a[idx], b[idx]
    # scale eps for cross products (length^2 units)
    ceps = eps * max(1.0, x1 - x0, y1 - y0)
    hit = points_in_polygon(sa, poly) | points_in_polygon(sb, poly)
    for c, d in zip(*poly.edges):
        todo = ~hit
        if not np.any(todo):
            break
        hit[todo] = _segments_cross(
            sa[todo, 0], sa[todo, 1], sb[todo, 0], sb[todo, 1], c[0], c[1], d[0], d[1], ceps
        )
    result[idx] = hit
    return result


def segment_intersects_polygon(a: Point2, b: Point2, poly: Polygon) -> bool:
    """True iff segment ab touches the polygon boundary or has an endpoint inside."""
    a = as_points(a)
    b = as_points(b)
    if np.array_equal(a, b):
        raise GeometryError("degenerate segment: endpoints coincide")
    return bool(segments_intersect_polygon(a, b, poly)[0])


def segment_segment_distance(a, b, c, d) -> np.ndarray:
    """Distance between segment batch ab and a single segment cd."""
    a = as_points(a)
    b = as_points(b)
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    cross = _segments_cross(
        a[:, 0], a[:, 1], b[:, 0], b[:, 1], c[0], c[1], d[0], d[1], 0.0
    )
    dist = np.minimum(point_segment_distance(a, c, d), point_segment_distance(b, c, d))
    ab = b - a
    for q in (c, d):
        # distance from q to every segment of the batch
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.where(denom > 0, np.einsum("ij,ij->i", q - a, ab) / np.where(denom > 0, denom, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        proj = a + t[:, None] * ab
        np.minimum(dist, np.hypot(proj[:, 0] - q[0], proj[:, 1] - q[1]), out=dist)
    dist[cross] = 0.0
    return dist


def segments_polygon_distance(a, b, poly: Polygon) -> np.ndarray:
    """Distance from each segment ab to the polygon region (zero if touching/inside)."""
    a = as_points(a)
    b = as_points(b)
    out = np.full(len(a), np.inf)
    for c, d in zip(*poly.edges):
        np.minimum(out, segment_segment_distance(a, b, c, d), out=out)
    out[points_in_polygon(a, poly)] = 0.0
    return out


@dataclass(frozen=True)
class EnvironmentMap:
    """Search domain: outer boundary, opaque obstacles and detection radius."""

    boundary: Polygon
    obstacles: Tuple[Polygon, ...] = ()
    detection_radius: float = 1.0

    def __post_init__(self):
        r = float(self.detection_radius)
        if not (math.isfinite(r) and r > 0):
            raise GeometryError("detection radius must be positive")
        object.__setattr__(self, "detection_radius", r)
        obstacles = tuple(self.obstacles)
        for k, obs in enumerate(obstacles):
            if not np.all(points_in_polygon(obs.vertices, self.boundary)):
                raise GeometryError(f"obstacle {k} has vertices outside the boundary")
        object.__setattr__(self, "obstacles", obstacles)

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        return self.boundary.bbox

    @property
    def diagonal(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    def in_free_space(self, points) -> np.ndarray:
        """Inside the boundary and outside (not on) every obstacle."""
        p = as_points(points)
        free = points_in_polygon(p, self.boundary)
        for obs in self.obstacles:
            free &= ~points_in_polygon(p, obs)
        return free

    def obstacle_distance(self, points) -> np.ndarray:
        p = as_points(points)
        out = np.full(len(p), np.inf)
        for obs in self.obstacles:
            np.minimum(out, points_polygon_distance(p, obs), out=out)
        return out

    def to_dict(self) -> dict:
        return {
            "boundary": self.boundary.to_list(),
            "obstacles": [o.to_list() for o in self.obstacles],
            "detection_radius": self.detection_radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnvironmentMap":
        try:
            boundary = Polygon(data["boundary"])
            obstacles = tuple(Polygon(o) for o in data.get("obstacles", []))
            r = data["detection_radius"]
        except KeyError as exc:
            raise GeometryError(f"map JSON missing field {exc}") from None
        return cls(boundary, obstacles, r)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=None, separators=(",", ":"))


def load_map(path: Union[str, Path]) -> EnvironmentMap:
    with open(path) as f:
        return EnvironmentMap.from_dict(json.load(f))


def save_map(env: EnvironmentMap, path: Union[str, Path]) -> None:
    Path(path).write_text(env.to_json() + "\n")


def rectangle(x0: float, y0: float, x1: float, y1: float) -> Polygon:
    return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
