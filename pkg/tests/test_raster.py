import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coverplan.geometry import EnvironmentMap, GeometryError, Polygon, rectangle, signed_area
from coverplan.metrics import path_length
from coverplan.raster import (
    RasterGrid,
    boundary_cells,
    dilate,
    rasterize,
    rasterize_segments,
    simplify_closed,
    trace_contour,
)


def grid_with(cells, cell=1.0):
    return RasterGrid((0.0, 0.0), cell, np.asarray(cells, dtype=bool))


def test_rasterize_open_square():
    env = EnvironmentMap(rectangle(0, 0, 10, 10), (), 5.0)
    assert rasterize(env, 1.0).count == 100


def test_rasterize_centered_obstacle_quarter_area():
    env = EnvironmentMap(rectangle(0, 0, 10, 10), (rectangle(2.5, 2.5, 7.5, 7.5),), 5.0)
    grid = rasterize(env, 0.1)
    percent = 100.0 * grid.count / grid.cells.size
    assert abs(percent - 75) <= 0.02 * 75


def test_rasterize_rejects_bad_cell_and_degenerate_boundary():
    env = EnvironmentMap(rectangle(0, 0, 1, 1), (), 1.0)
    with pytest.raises(GeometryError):
        rasterize(env, 0.0)
    with pytest.raises(GeometryError):
        EnvironmentMap(Polygon([(0, 0), (1, 0), (2, 0)]), (), 1.0)


def test_rasterize_is_deterministic():
    env = EnvironmentMap(rectangle(0, 0, 7.3, 4.1), (Polygon([(1, 1), (3, 1.2), (2, 3)]),), 1.0)
    a, b = rasterize(env, 0.1), rasterize(env, 0.1)
    assert a.cells.tobytes() == b.cells.tobytes()


def brute_force_disk_count(radius_cells):
    k = int(radius_cells) + 1
    return sum(1 for dx in range(-k, k + 1) for dy in range(-k, k + 1) if dx * dx + dy * dy <= radius_cells**2)


def test_dilate_single_cell_matches_disk_count():
    cells = np.zeros((11, 11), dtype=bool)
    cells[5, 5] = True
    out = dilate(grid_with(cells, 0.5), 1.5)
    assert out.count == brute_force_disk_count(3) == 29


def test_dilate_sub_cell_radius_is_identity():
    cells = np.zeros((5, 5), dtype=bool)
    cells[2, 1:4] = True
    out = dilate(grid_with(cells), 0.9)
    assert np.array_equal(out.cells, cells)


def test_dilate_rejects_nonpositive_radius():
    with pytest.raises(GeometryError):
        dilate(grid_with(np.ones((2, 2))), 0.0)


def test_dilated_line_is_stadium():
    c, r, L = 0.05, 1.0, 6.0
    grid = RasterGrid.covering((0, 0, L + 4, 4), c)
    line = rasterize_segments(grid, [(2, 2)], [(2 + L, 2)])
    area = dilate(line, r).area
    assert abs(area - (2 * r * L + math.pi * r * r)) <= 0.05 * (2 * r * L + math.pi * r * r)


def test_dilate_brute_force_on_random_raster():
    rng = np.random.default_rng(3)
    cells = rng.random((15, 17)) < 0.05
    radius = 2.3
    out = dilate(grid_with(cells), radius).cells
    iy, ix = np.nonzero(cells)
    yy, xx = np.mgrid[0:15, 0:17]
    ref = np.zeros_like(cells)
    for y, x in zip(iy, ix):
        ref |= (yy - y) ** 2 + (xx - x) ** 2 <= radius**2
    assert np.array_equal(out, ref)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    r1=st.floats(0.5, 3.0),
    r2=st.floats(0.5, 3.0),
)
def test_dilate_properties(seed, r1, r2):
    rng = np.random.default_rng(seed)
    a = rng.random((30, 30)) < 0.03
    b = a | (rng.random((30, 30)) < 0.03)
    ga, gb = grid_with(a), grid_with(b)
    da = dilate(ga, r1).cells
    assert np.all(da[a])  # extensive
    assert np.all(dilate(gb, r1).cells[da])  # increasing
    if a.any():
        once = dilate(ga, r1 + r2).cells
        twice = dilate(dilate(ga, r1), r2).cells
        # composing disks of radius r1, r2 differs from r1 + r2 by at most a cell
        assert np.all(once[twice])
        loose = dilate(dilate(dilate(ga, r1), r2), 1.5).cells
        assert np.all(loose[once])


def test_trace_filled_block_perimeter():
    cells = np.zeros((9, 9), dtype=bool)
    cells[2:7, 2:7] = True
    traj = trace_contour(grid_with(cells))
    assert traj.closed
    assert np.array_equal(traj.points[0], traj.points[-1])
    assert abs(path_length(traj) - 4 * 5) <= 4 * 1.0
    assert signed_area(traj.points[:-1]) > 0  # counter-clockwise


def test_trace_single_cell():
    cells = np.zeros((3, 3), dtype=bool)
    cells[1, 1] = True
    traj = trace_contour(grid_with(cells))
    assert np.allclose(traj.points, [[1.5, 1.5], [1.5, 1.5]])


def test_trace_starts_at_smallest_boundary_cell():
    cells = np.zeros((6, 6), dtype=bool)
    cells[1:5, 2:5] = True
    cells[3, 1] = True
    traj = trace_contour(grid_with(cells))
    assert np.allclose(traj.points[0], [1.5, 3.5])


def test_trace_errors():
    with pytest.raises(GeometryError):
        trace_contour(grid_with(np.zeros((3, 3))))
    cells = np.zeros((3, 5), dtype=bool)
    cells[1, 0] = cells[1, 4] = True
    with pytest.raises(GeometryError):
        trace_contour(grid_with(cells))


def test_trace_waypoints_lie_on_boundary_cells():
    rng = np.random.default_rng(5)
    c = 0.1
    grid = RasterGrid.covering((0, 0, 10, 10), c)
    a = rng.uniform(2, 8, (4, 2))
    region = dilate(rasterize_segments(grid, a[:-1], a[1:]), 1.0)
    traj = trace_contour(region)
    edge = boundary_cells(region.cells)
    ij = np.floor((traj.points - region.origin) / c).astype(int)
    assert np.all(edge[ij[:, 1], ij[:, 0]])


def test_trace_dilated_l_tree_length():
    c, r = 0.02, 1.0
    grid = RasterGrid.covering((-2, -2, 8, 6), c)
    a = np.array([[0.0, 0.0], [4.0, 0.0]])
    b = np.array([[4.0, 0.0], [4.0, 3.0]])
    tree = rasterize_segments(grid, a, b)
    traj = trace_contour(dilate(tree, r))
    expected = 2 * 7.0 + 2 * math.pi * r
    assert abs(path_length(traj) - expected) <= 0.10 * expected


def test_simplify_closed_keeps_square_corners():
    side = np.linspace(0, 1, 11)[:-1]
    ring = np.vstack(
        [
            np.column_stack([side, np.zeros(10)]),
            np.column_stack([np.ones(10), side]),
            np.column_stack([1 - side, np.ones(10)]),
            np.column_stack([np.zeros(10), 1 - side]),
        ]
    )
    out = simplify_closed(ring, 1e-6)
    assert {tuple(p) for p in out} == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert len(simplify_closed(ring, 0.0)) == 40
