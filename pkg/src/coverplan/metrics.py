"""
Coverage scoring: uncovered area ratio (UAR), adjusted length of path (ALOP).

UAR is measured on the free-space raster (boundary minus obstacles); a free
cell counts as covered when its center is within the detection radius of the
trajectory polyline. ALOP = path length * r / covered area.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from .geometry import EnvironmentMap, GeometryError, point_segment_distance
from .raster import RasterGrid, rasterize
from .trajectory import Trajectory


@dataclass(frozen=True)
class CoverageReport:
    uar_percent: float
    alop: float
    path_length: float
    covered_area: float
    free_area: float
    plan_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def path_length(traj: Trajectory) -> float:
    """Euclidean polyline length; the closing segment counts only if closed."""
    if len(traj.points) < 2:
        raise GeometryError("path length needs at least 2 waypoints")
    a, b = traj.segments()
    return float(np.hypot(*(b - a).T).sum())


def covered_cells(traj: Trajectory, free: RasterGrid, radius: float) -> np.ndarray:
    """Free cells whose centers lie within ``radius`` of the trajectory polyline."""
    c = free.cell_size
    x0, y0 = free.origin
    h, w = free.cells.shape
    covered = np.zeros_like(free.cells)
    if len(traj.points) == 1:
        a = b = traj.points
    else:
        a, b = traj.segments()
    for p, q in zip(a, b):
        lo = np.minimum(p, q) - radius
        hi = np.maximum(p, q) + radius
        c0 = max(0, int(math.floor((lo[0] - x0) / c - 0.5)))
        c1 = min(w, int(math.ceil((hi[0] - x0) / c - 0.5)) + 1)
        r0 = max(0, int(math.floor((lo[1] - y0) / c - 0.5)))
        r1 = min(h, int(math.ceil((hi[1] - y0) / c - 0.5)) + 1)
        if c1 <= c0 or r1 <= r0:
            continue
        sub = free.cells[r0:r1, c0:c1]
        if not sub.any():
            continue
        gx, gy = np.meshgrid(x0 + (np.arange(c0, c1) + 0.5) * c, y0 + (np.arange(r0, r1) + 0.5) * c)
        d = point_segment_distance(np.column_stack([gx.ravel(), gy.ravel()]), p, q).reshape(gx.shape)
        covered[r0:r1, c0:c1] |= (d <= radius) & sub
    return covered


def coverage(
    traj: Trajectory, env: EnvironmentMap, cell: Optional[float] = None, free: Optional[RasterGrid] = None
) -> Tuple[float, float]:
    """Return ``(covered_area, uar_percent)`` on a raster of size ``cell`` (default r/10)."""
    r = env.detection_radius
    if free is None:
        free = rasterize(env, cell if cell is not None else r / 10.0)
    n_free = free.count
    if n_free == 0:
        raise GeometryError("map has no free area at this resolution")
    n_cov = int(covered_cells(traj, free, r).sum())
    return n_cov * free.cell_size**2, 100.0 * (n_free - n_cov) / n_free


def alop(length: float, r: float, covered_area: float) -> float:
    if not covered_area > 0:
        raise GeometryError("ALOP undefined for zero covered area")
    return length * r / covered_area


def score(
    traj: Trajectory,
    env: EnvironmentMap,
    cell: Optional[float] = None,
    plan_time: float = 0.0,
    free: Optional[RasterGrid] = None,
) -> CoverageReport:
    r = env.detection_radius
    if free is None:
        free = rasterize(env, cell if cell is not None else r / 10.0)
    covered, uar = coverage(traj, env, free=free)
    length = path_length(traj) if len(traj.points) > 1 else 0.0
    value = alop(length, r, covered) if covered > 0 else math.inf
    return CoverageReport(uar, value, length, covered, free.area, plan_time)
