"""
Spanning-tree coverage planner.

The free domain is sampled by a lattice of centers spaced 2r (square or
hexagonal), a minimum spanning tree is extracted under an anisotropic edge
length that makes horizontal edges cheap, and the tree is dilated on a raster. The outer
contour of the dilated tree is the coverage loop; it walks around every branch
like a depth-first traversal kept at a fixed offset from the tree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    EnvironmentMap,
    GeometryError,
    distance_to_boundary,
    points_in_polygon,
    segment_segment_distance,
    segments_polygon_distance,
)
from .raster import RasterGrid, rasterize_segments, trace_contour
from .trajectory import Trajectory

log = logging.getLogger(__name__)

TILINGS = ("square", "hexagonal")


@dataclass(frozen=True)
class MstConfig:
    epsilon: float = 0.01
    tiling: str = "square"
    favor: str = "horizontal"  # axis whose edges stay cheap
    raster_cell: Optional[float] = None  # default r/10
    offset: Optional[float] = None  # contour distance from the tree; default per tiling
    simplify: Optional[float] = None  # default raster_cell/2

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.favor not in ("horizontal", "vertical"):
            raise ValueError("favor must be 'horizontal' or 'vertical'")
        if self.tiling not in TILINGS:
            raise ValueError(f"tiling must be one of {TILINGS}")
        if self.raster_cell is not None and not self.raster_cell > 0:
            raise ValueError("raster_cell must be positive")

    def cell(self, r: float) -> float:
        return self.raster_cell if self.raster_cell is not None else r / 10.0

    def contour_offset(self, r: float) -> float:
        """Distance between the tree and the coverage loop.

        Two tree branches that are lattice neighbors but not linked in the
        tree are 2r apart on the square lattice and r*sqrt(3) apart on the
        hexagonal one. Their dilations must stay at least one raster cell
        apart, otherwise the contour skips the corridor between them.
        """
        if self.offset is not None:
            return float(self.offset)
        half_gap = r if self.tiling == "square" else 0.5 * math.sqrt(3.0) * r
        return half_gap - self.cell(r)


@dataclass(frozen=True)
class GridGraph:
    vertices: np.ndarray  # (V, 2)
    edges: np.ndarray  # (E, 2) int, i < j
    weights: np.ndarray  # (E,)
    tiling: str
    spacing: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class SpanningTree:
    vertices: np.ndarray  # indices of the spanned component
    edges: np.ndarray  # (V-1, 2)
    weight: float
    dropped: int = 0  # graph vertices outside the spanned component


def lattice_points(bbox, r: float, tiling: str, clearance: float = None) -> np.ndarray:
    """Lattice centers spaced 2r.

    Square lattices are anchored at the bbox minimum corner plus r. Hexagonal
    rows (pitch r*sqrt(3)) keep x anchored the same way but are centered
    vertically: as many rows as fit at ``clearance`` from the bbox edges,
    with equal slack above and below.
    """
    x0, y0, x1, y1 = bbox
    s = 2.0 * r
    if tiling == "square":
        nx = int(math.floor((x1 - x0 - r) / s + 1e-9)) + 1
        ny = int(math.floor((y1 - y0 - r) / s + 1e-9)) + 1
        gx, gy = np.meshgrid(x0 + r + s * np.arange(nx), y0 + r + s * np.arange(ny))
        return np.column_stack([gx.ravel(), gy.ravel()])
    pitch = math.sqrt(3.0) * r
    clearance = r if clearance is None else clearance
    span = y1 - y0 - 2.0 * clearance
    if span < 0:
        return np.zeros((0, 2))
    ny = int(math.floor(span / pitch + 1e-9)) + 1
    first = y0 + 0.5 * (y1 - y0 - (ny - 1) * pitch)
    rows = []
    for k in range(ny):
        shift = r if k % 2 else 0.0
        nx = int(math.floor((x1 - x0 - r - shift) / s + 1e-9)) + 1
        if nx <= 0:
            continue
        xs = x0 + r + shift + s * np.arange(nx)
        rows.append(np.column_stack([xs, np.full(nx, first + k * pitch)]))
    return np.vstack(rows) if rows else np.zeros((0, 2))


def anisotropic_length(d: np.ndarray, epsilon: float, favor: str = "horizontal") -> np.ndarray:
    """Edge length sqrt(a^2 + eps*b^2), with b the component along the favored axis.

    Shrinking the favored component makes those edges cheaper, so the tree
    (and the loop around it) grows along that axis.
    """
    d = np.asarray(d, dtype=float).reshape(-1, 2)
    along, across = (d[:, 0], d[:, 1]) if favor == "horizontal" else (d[:, 1], d[:, 0])
    return np.sqrt(across**2 + epsilon * along**2)


def build_grid(env: EnvironmentMap, cfg: MstConfig) -> GridGraph:
    """Lattice graph over the free domain.

    Vertices keep a clearance of at least r from every obstacle and of at
    least the contour offset from the outer boundary. Lattice neighbors are
    linked when the offset tube around their segment stays clear of obstacles
    and inside the boundary.
    """
    r = env.detection_radius
    offset = cfg.contour_offset(r)
    if not offset > 0:
        raise GeometryError("contour offset must be positive; use a finer raster")
    tol = 1e-9 * r
    pts = lattice_points(env.bbox, r, cfg.tiling, offset)
    if len(pts):
        keep = points_in_polygon(pts, env.boundary)
        keep &= distance_to_boundary(pts, env.boundary) >= offset - tol
        keep &= env.obstacle_distance(pts) >= r - tol
        pts = pts[keep]
    if len(pts) == 0:
        raise GeometryError("domain too small for spacing 2r")

    pairs = cKDTree(pts).query_pairs(2.0 * r * (1 + 1e-6), output_type="ndarray")
    if len(pairs):
        pairs = np.sort(pairs, axis=1)
        a, b = pts[pairs[:, 0]], pts[pairs[:, 1]]
        ok = np.ones(len(pairs), dtype=bool)
        for obs in env.obstacles:
            ok &= segments_polygon_distance(a, b, obs) >= offset - tol
        for c, d in zip(*env.boundary.edges):
            ok &= segment_segment_distance(a, b, c, d) >= offset - tol
        pairs = pairs[ok]
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs = pairs[order]
    else:
        pairs = np.zeros((0, 2), dtype=np.int64)
    weights = anisotropic_length(pts[pairs[:, 1]] - pts[pairs[:, 0]], cfg.epsilon, cfg.favor)
    return GridGraph(pts, pairs.astype(np.int64), weights, cfg.tiling, 2.0 * r)


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def kruskal_mst(graph: GridGraph) -> SpanningTree:
    """Minimum spanning tree of the largest connected component.

    Edges are scanned by ascending (weight, i, j) and kept unless they close
    a cycle, so equal-weight ties resolve deterministically.
    """
    n = graph.n_vertices
    if n == 0:
        raise GeometryError("empty graph")
    edges = np.sort(np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2), axis=1)
    w = np.asarray(graph.weights, dtype=float)
    order = np.lexsort((edges[:, 1], edges[:, 0], w))
    uf = UnionFind(n)
    chosen = []
    for k in order:
        i, j = int(edges[k, 0]), int(edges[k, 1])
        if uf.union(i, j):
            chosen.append(k)
    roots = np.array([uf.find(i) for i in range(n)])
    sizes = np.bincount(roots, minlength=n)
    # largest component; ties go to the one holding the lowest vertex index
    best = max(range(n), key=lambda v: (sizes[roots[v]], -v))
    root = roots[best]
    members = np.flatnonzero(roots == root)
    chosen = np.asarray(chosen, dtype=np.int64)
    if chosen.size:
        chosen = chosen[roots[edges[chosen, 0]] == root]
    tree_edges = edges[chosen] if chosen.size else np.zeros((0, 2), dtype=np.int64)
    return SpanningTree(members, tree_edges, float(w[chosen].sum()) if chosen.size else 0.0, n - len(members))


def tree_region(graph: GridGraph, tree: SpanningTree, grid: RasterGrid, offset: float) -> RasterGrid:
    """Cells whose centers lie within ``offset`` of the tree.

    This is the disk dilation of the continuous tree sampled at cell centers;
    dilating a one-cell-wide rasterized line instead would shift the contour
    by up to half a cell.
    """
    if len(tree.edges):
        a = graph.vertices[tree.edges[:, 0]]
        b = graph.vertices[tree.edges[:, 1]]
    else:
        a = b = graph.vertices[tree.vertices[:1]]
    return rasterize_segments(grid, a, b, offset)


def plan_mst(env: EnvironmentMap, cfg: MstConfig = MstConfig()) -> Trajectory:
    r = env.detection_radius
    c = cfg.cell(r)
    offset = cfg.contour_offset(r)
    graph = build_grid(env, cfg)
    tree = kruskal_mst(graph)
    if tree.dropped:
        log.warning(
            "lattice graph is disconnected; planning on the largest component, %d vertices dropped",
            tree.dropped,
        )
    grid = RasterGrid.covering(env.bbox, c, margin=2 * c)
    region = tree_region(graph, tree, grid, offset)
    simplify = cfg.simplify if cfg.simplify is not None else 0.5 * c
    traj = trace_contour(region, simplify=simplify)
    meta = {
        "algorithm": "mst-" + ("square" if cfg.tiling == "square" else "hex"),
        "vertices": int(len(tree.vertices)),
        "dropped_vertices": int(tree.dropped),
        "tree_weight": tree.weight,
    }
    return Trajectory(traj.points, closed=True, meta=meta)
