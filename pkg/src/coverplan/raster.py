"""
Binary raster grids: map rasterization, disk dilation and contour following.

Rows index y (row 0 at the bottom), columns index x. A cell is represented by
its center; every geometric test on a cell uses that center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from .geometry import EnvironmentMap, GeometryError, Polygon, point_segment_distance
from .trajectory import Trajectory


@dataclass(frozen=True)
class RasterGrid:
    origin: Tuple[float, float]
    cell_size: float
    cells: np.ndarray  # bool, shape (height, width)

    def __post_init__(self):
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise GeometryError("cell_size must be positive")
        cells = np.asarray(self.cells, dtype=bool)
        if cells.ndim != 2:
            raise GeometryError("cells must be a 2-D array")
        cells = cells.copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def count(self) -> int:
        return int(self.cells.sum())

    @property
    def area(self) -> float:
        return self.count * self.cell_size**2

    def xs(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.width) + 0.5) * self.cell_size

    def ys(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.height) + 0.5) * self.cell_size

    def centers(self, mask=None) -> np.ndarray:
        iy, ix = np.nonzero(self.cells if mask is None else mask)
        return np.column_stack(
            [
                self.origin[0] + (ix + 0.5) * self.cell_size,
                self.origin[1] + (iy + 0.5) * self.cell_size,
            ]
        )

    def with_cells(self, cells) -> "RasterGrid":
        return RasterGrid(self.origin, self.cell_size, cells)

    def empty_like(self) -> "RasterGrid":
        return self.with_cells(np.zeros_like(self.cells))

    @classmethod
    def covering(cls, bbox, cell_size: float, margin: float = 0.0) -> "RasterGrid":
        if not cell_size > 0:
            raise GeometryError("cell_size must be positive")
        x0, y0, x1, y1 = bbox
        x0 -= margin
        y0 -= margin
        w = max(1, int(math.ceil((x1 + margin - x0) / cell_size - 1e-9)))
        h = max(1, int(math.ceil((y1 + margin - y0) / cell_size - 1e-9)))
        return cls((x0, y0), cell_size, np.zeros((h, w), dtype=bool))


def polygon_mask(poly: Polygon, grid: RasterGrid) -> np.ndarray:
    """Cells whose centers lie inside ``poly`` (on-edge centers included).

    Scanline form of the crossing-number rule used by
    :func:`coverplan.geometry.points_in_polygon`, so both agree cell for cell.
    """
    xs, ys = grid.xs(), grid.ys()
    h, w = grid.height, grid.width
    toggles = np.zeros((h, w + 1), dtype=np.int32)
    on_edge = np.zeros((h, w), dtype=bool)
    eps = poly._eps()
    for a, b in zip(*poly.edges):
        (ax, ay), (bx, by) = a, b
        lo, hi = (ay, by) if ay < by else (by, ay)
        if lo != hi:
            # rows with lo <= y < hi straddle the edge
            r0 = np.searchsorted(ys, lo, side="left")
            r1 = np.searchsorted(ys, hi, side="left")
            if r1 > r0:
                yr = ys[r0:r1]
                xc = ax + (yr - ay) * (bx - ax) / (by - ay)
                k = np.searchsorted(xs, xc, side="left")
                rows = np.arange(r0, r1)
                np.add.at(toggles, (rows, np.zeros_like(rows)), 1)
                np.add.at(toggles, (rows, k), 1)
        c0 = np.searchsorted(xs, min(ax, bx) - eps, side="left")
        c1 = np.searchsorted(xs, max(ax, bx) + eps, side="right")
        q0 = np.searchsorted(ys, min(ay, by) - eps, side="left")
        q1 = np.searchsorted(ys, max(ay, by) + eps, side="right")
        if c1 > c0 and q1 > q0:
            gx, gy = np.meshgrid(xs[c0:c1], ys[q0:q1])
            d = point_segment_distance(np.column_stack([gx.ravel(), gy.ravel()]), a, b)
            on_edge[q0:q1, c0:c1] |= (d <= eps).reshape(gx.shape)
    parity = (np.cumsum(toggles, axis=1)[:, :w] & 1).astype(bool)
    return parity | on_edge


def rasterize(env: EnvironmentMap, cell_size: float) -> RasterGrid:
    """Free-space raster over the boundary bounding box.

    A cell is free iff its center is inside the boundary and outside (not on)
    every obstacle.
    """
    if not (cell_size > 0 and math.isfinite(cell_size)):
        raise GeometryError("cell_size must be positive")
    grid = RasterGrid.covering(env.bbox, cell_size)
    free = polygon_mask(env.boundary, grid)
    for obs in env.obstacles:
        free &= ~polygon_mask(obs, grid)
    return grid.with_cells(free)


def rasterize_segments(grid: RasterGrid, a, b, half_width: float = None) -> RasterGrid:
    """Set cells whose centers are within ``half_width`` of any segment ab.

    The default half-width of half a cell yields an 8-connected thin line.
    """
    c = grid.cell_size
    hw = 0.5 * c if half_width is None else float(half_width)
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    cells = grid.cells.copy()
    x0, y0 = grid.origin
    for p, q in zip(a, b):
        lo = np.minimum(p, q) - hw
        hi = np.maximum(p, q) + hw
        c0 = max(0, int(math.floor((lo[0] - x0) / c - 0.5)))
        c1 = min(grid.width, int(math.ceil((hi[0] - x0) / c - 0.5)) + 1)
        r0 = max(0, int(math.floor((lo[1] - y0) / c - 0.5)))
        r1 = min(grid.height, int(math.ceil((hi[1] - y0) / c - 0.5)) + 1)
        if c1 <= c0 or r1 <= r0:
            continue
        gx, gy = np.meshgrid(x0 + (np.arange(c0, c1) + 0.5) * c, y0 + (np.arange(r0, r1) + 0.5) * c)
        d = point_segment_distance(np.column_stack([gx.ravel(), gy.ravel()]), p, q)
        cells[r0:r1, c0:c1] |= (d <= hw * (1 + 1e-12)).reshape(gx.shape)
    return grid.with_cells(cells)


def disk_offsets(radius_cells: float) -> np.ndarray:
    """Integer offsets (dx, dy) with dx^2 + dy^2 <= radius^2."""
    k = int(math.floor(radius_cells + 1e-9))
    dy, dx = np.mgrid[-k : k + 1, -k : k + 1]
    keep = dx * dx + dy * dy <= radius_cells * radius_cells * (1 + 1e-12) + 1e-12
    return np.column_stack([dx[keep], dy[keep]])


def dilate(grid: RasterGrid, radius: float) -> RasterGrid:
    """Morphological dilation by a disk of ``radius`` meters.

    A cell is set iff some set cell center lies within ``radius`` of its center.
    Computed through an exact Euclidean distance transform, which equals the
    disk structuring element while staying linear in the raster size. Cells
    beyond the grid extent are dropped.
    """
    if not radius > 0:
        raise GeometryError("dilation radius must be positive")
    if not grid.cells.any():
        return grid.with_cells(grid.cells)
    dist = ndimage.distance_transform_edt(~grid.cells)
    return grid.with_cells(dist <= radius / grid.cell_size * (1 + 1e-12) + 1e-9)


_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # E, N, W, S
_LEFT = ((0, 0), (-1, 0), (-1, -1), (0, -1))
_RIGHT = ((0, -1), (0, 0), (-1, 0), (-1, -1))


def boundary_chain(cells: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Crack-follow the outer boundary of the component holding the start cell.

    The walk runs along cell edges counter-clockwise (region on the left),
    starting down the left edge of the lexicographically smallest (x, then y)
    set cell. The region is treated as 4-connected: at a diagonal pinch the
    walk turns back onto its own component.

    Returns ``(corners, chain)``: for every boundary edge, its starting lattice
    corner ``(vx, vy)`` and the set cell ``(ix, iy)`` on its left. Both arrays
    have one row per edge.
    """
    cells = np.asarray(cells, dtype=bool)
    if not cells.any():
        raise GeometryError("cannot trace an empty raster")
    padded = np.pad(cells, 1)
    iy, ix = np.nonzero(cells)
    order = np.lexsort((iy, ix))
    sx, sy = int(ix[order[0]]) + 1, int(iy[order[0]]) + 1

    start = (sx, sy + 1)
    d = 3  # heading south along the cell's west edge
    vx, vy = start
    corners: List[Tuple[int, int]] = []
    chain: List[Tuple[int, int]] = []
    limit = 4 * padded.size + 4
    while True:
        lx, ly = _LEFT[d]
        corners.append((vx, vy))
        chain.append((vx + lx, vy + ly))
        dx, dy = _DIRS[d]
        vx += dx
        vy += dy
        lx, ly = _LEFT[d]
        rx, ry = _RIGHT[d]
        if not padded[vy + ly, vx + lx]:
            d = (d + 1) & 3
        elif padded[vy + ry, vx + rx]:
            d = (d + 3) & 3
        if vx == start[0] and vy == start[1] and d == 3:
            break
        if len(corners) > limit:
            raise RuntimeError("contour following did not close")
    corners_arr = np.asarray(corners, dtype=np.int64) - 1
    chain_arr = np.asarray(chain, dtype=np.int64) - 1
    return corners_arr, chain_arr


def simplify_closed(points: np.ndarray, tol: float, keep_first: bool = True) -> np.ndarray:
    """Douglas-Peucker on a closed ring given without its repeated end point.

    Returns the kept subset in ring order. ``tol <= 0`` keeps everything.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if tol <= 0 or n <= 3:
        return pts
    d0 = np.hypot(*(pts - pts[0]).T)
    far = int(np.argmax(d0))
    keep = np.zeros(n + 1, dtype=bool)
    keep[[0, far, n]] = True
    ring = np.vstack([pts, pts[:1]])
    stack = [(0, far), (far, n)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = point_segment_distance(ring[i + 1 : j], ring[i], ring[j])
        k = int(np.argmax(d))
        if d[k] > tol:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    out = ring[:n][keep[:n]]
    if not keep_first and len(out) > 3:
        if point_segment_distance(out[:1], out[-1], out[1])[0] <= tol:
            out = out[1:]
    return out


def _check_single_component(cells: np.ndarray) -> None:
    _, count = ndimage.label(cells)
    if count == 0:
        raise GeometryError("cannot trace an empty raster")
    if count > 1:
        raise GeometryError(f"raster has {count} disconnected components")


def trace_contour(grid: RasterGrid, simplify: float = 0.0) -> Trajectory:
    """Closed loop through the boundary cells of a 4-connected region.

    Waypoints are boundary-cell centers in counter-clockwise order, starting
    at the lexicographically smallest boundary cell; the first waypoint is
    repeated at the end. ``simplify`` > 0 thins the loop with Douglas-Peucker
    (kept waypoints are still boundary-cell centers).
    """
    _check_single_component(grid.cells)
    _, chain = boundary_chain(grid.cells)
    keep = np.ones(len(chain), dtype=bool)
    keep[1:] = np.any(chain[1:] != chain[:-1], axis=1)
    chain = chain[keep]
    if len(chain) > 1 and np.array_equal(chain[-1], chain[0]):
        chain = chain[:-1]
    c = grid.cell_size
    pts = np.column_stack(
        [grid.origin[0] + (chain[:, 0] + 0.5) * c, grid.origin[1] + (chain[:, 1] + 0.5) * c]
    )
    pts = simplify_closed(pts, simplify)
    return Trajectory(np.vstack([pts, pts[:1]]), closed=True)


def boundary_cells(cells: np.ndarray) -> np.ndarray:
    """Set cells with at least one unset (or off-grid) 4-neighbor."""
    padded = np.pad(np.asarray(cells, dtype=bool), 1)
    core = padded[1:-1, 1:-1]
    interior = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    return core & ~interior
