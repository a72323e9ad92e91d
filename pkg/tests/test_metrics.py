import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coverplan.geometry import EnvironmentMap, GeometryError, rectangle
from coverplan.metrics import alop, coverage, covered_cells, path_length, score
from coverplan.raster import rasterize
from coverplan.trajectory import Trajectory, load_trajectory, save_trajectory

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


def test_unit_square_loop_length():
    assert path_length(Trajectory(SQUARE, closed=True)) == pytest.approx(4.0)


def test_open_segment_length():
    assert path_length(Trajectory([[0, 0], [3, 4]])) == 5.0


def test_closing_segment_toggle():
    pts = [[0, 0], [2, 0], [2, 3]]
    diff = path_length(Trajectory(pts, closed=True)) - path_length(Trajectory(pts))
    assert diff == pytest.approx(math.hypot(2, 3))


def test_path_length_needs_two_points():
    with pytest.raises(GeometryError):
        path_length(Trajectory([[1, 1]]))


def test_dense_sweep_covers_square():
    env = EnvironmentMap(rectangle(0, 0, 10, 10), (), 1.0)
    rows = []
    for k, y in enumerate(np.arange(0.5, 10, 1.0)):
        xs = (0.0, 10.0) if k % 2 == 0 else (10.0, 0.0)
        rows += [[xs[0], y], [xs[1], y]]
    _, uar = coverage(Trajectory(rows), env)
    assert uar < 1.0


def test_single_point_in_2r_square():
    env = EnvironmentMap(rectangle(0, 0, 2, 2), (), 1.0)
    _, uar = coverage(Trajectory([[1, 1]]), env, cell=0.01)
    assert uar == pytest.approx((1 - math.pi / 4) * 100, abs=0.1)


def test_far_trajectory_covers_nothing():
    env = EnvironmentMap(rectangle(0, 0, 5, 5), (), 1.0)
    covered, uar = coverage(Trajectory([[10, 10], [12, 10]]), env)
    assert covered == 0 and uar == 100.0
    assert math.isinf(score(Trajectory([[10, 10], [12, 10]]), env).alop)


def test_alop_formula():
    assert alop(10, 1, 20) == 0.5
    assert alop(10, 2, 20) == 2 * alop(10, 1, 20)
    with pytest.raises(GeometryError):
        alop(10, 1, 0.0)


def test_alop_of_straight_segment_matches_stadium():
    r, L = 1.0, 8.0
    env = EnvironmentMap(rectangle(0, 0, 20, 10), (), r)
    traj = Trajectory([[6, 5], [6 + L, 5]])
    rep = score(traj, env, cell=0.02)
    expected = L * r / (2 * r * L + math.pi * r * r)
    assert rep.alop == pytest.approx(expected, rel=0.01)


def test_obstacle_area_excluded_from_free_area():
    env = EnvironmentMap(rectangle(0, 0, 10, 10), (rectangle(2, 2, 4, 4),), 1.0)
    rep = score(Trajectory([[1, 1], [9, 9]]), env, cell=0.05)
    assert rep.free_area == pytest.approx(96.0, rel=0.01)


def random_traj(seed, n):
    rng = np.random.default_rng(seed)
    return Trajectory(rng.uniform(-1, 11, (n, 2)), closed=bool(rng.integers(2)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5000), n=st.integers(2, 8), extra=st.integers(1, 4))
def test_metric_properties(seed, n, extra):
    env = EnvironmentMap(rectangle(0, 0, 10, 10), (rectangle(4, 4, 6, 7),), 1.0)
    free = rasterize(env, 0.1)
    traj = random_traj(seed, n)
    rep = score(traj, env, free=free)
    n_cov = int(covered_cells(traj, free, 1.0).sum())
    assert 100.0 * n_cov / free.count + rep.uar_percent == pytest.approx(100.0, abs=1e-9)
    assert 0 <= rep.uar_percent <= 100 and rep.covered_area <= rep.free_area
    rev = score(traj.reversed(), env, free=free)
    assert (rev.uar_percent, rev.path_length) == pytest.approx((rep.uar_percent, rep.path_length))
    more = np.vstack([traj.points, np.random.default_rng(seed + 1).uniform(-1, 11, (extra, 2))])
    assert score(Trajectory(more), env, free=free).covered_area >= score(Trajectory(traj.points), env, free=free).covered_area


def test_trajectory_json_roundtrip(tmp_path):
    traj = Trajectory([[0, 0], [1, 2], [0, 0]], closed=True, timestamps=[0, 1, 2], meta={"final_cost": 0.5})
    path = tmp_path / "t.json"
    save_trajectory(traj, path)
    back = load_trajectory(path)
    assert np.array_equal(back.points, traj.points) and back.closed
    assert back.meta["final_cost"] == 0.5
    assert np.array_equal(back.timestamps, traj.timestamps)
