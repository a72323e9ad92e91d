import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from coverplan.geometry import (
    EnvironmentMap,
    GeometryError,
    Polygon,
    distance_to_boundary,
    load_map,
    point_in_polygon,
    points_in_polygon,
    rectangle,
    save_map,
    segment_intersects_polygon,
    segments_intersect_polygon,
    segments_polygon_distance,
)


def winding_number(p, verts):
    """Reference winding number via summed signed angles."""
    total = 0.0
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        u, v = a - p, b - p
        total += math.atan2(u[0] * v[1] - u[1] * v[0], u @ v)
    return round(total / (2 * math.pi))


def winding_numbers(pts, verts):
    total = np.zeros(len(pts))
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        u, v = a - pts, b - pts
        total += np.arctan2(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0], np.sum(u * v, axis=1))
    return np.rint(total / (2 * math.pi)).astype(int)


def random_star_polygon(rng, n=12, center=(0.0, 0.0)):
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    rad = rng.uniform(0.3, 1.0, n)
    return Polygon(np.column_stack([center[0] + rad * np.cos(ang), center[1] + rad * np.sin(ang)]))


UNIT = rectangle(0, 0, 1, 1)


def test_point_in_unit_square():
    assert point_in_polygon((0.5, 0.5), UNIT)
    assert not point_in_polygon((2, 2), UNIT)


def test_edge_and_vertex_points_count_as_inside():
    assert point_in_polygon((1.0, 0.5), UNIT)
    assert point_in_polygon((0.0, 0.0), UNIT)
    assert not point_in_polygon((1.0 + 1e-9, 0.5), UNIT)


def test_point_in_polygon_rejects_non_polygon():
    with pytest.raises(GeometryError):
        point_in_polygon((0, 0), [(0, 0), (1, 0), (1, 1)])


def test_containment_agrees_with_winding_number_on_random_12gon():
    rng = np.random.default_rng(7)
    poly = random_star_polygon(rng)
    pts = rng.uniform(-1.1, 1.1, (1000, 2))
    fast = points_in_polygon(pts, poly)
    ref = np.array([winding_number(p, poly.vertices) != 0 for p in pts])
    assert np.array_equal(fast, ref)


@pytest.mark.parametrize(
    "verts",
    [
        [(0, 0), (1, 0)],
        [(0, 0), (1, 1), (2, 2)],
        [(0, 0), (1, 0), (0, 1), (1, 1)],  # bow tie
        [(0, 0), (1, 0), (1, float("nan"))],
    ],
)
def test_invalid_polygons_rejected(verts):
    with pytest.raises(GeometryError):
        Polygon(verts)


def test_closing_vertex_dropped_and_orientation():
    p = Polygon([(0, 0), (0, 1), (1, 1), (1, 0), (0, 0)])
    assert len(p.vertices) == 4
    assert p.signed_area == pytest.approx(-1.0)
    assert p.ccw().signed_area == pytest.approx(1.0)
    assert p.area == pytest.approx(1.0)


def test_segment_outside_and_through_square():
    sq = rectangle(0, 0, 1, 1)
    assert not segment_intersects_polygon((2, 0), (2, 1), sq)
    assert segment_intersects_polygon((-1, 0.5), (2, 0.5), sq)
    assert segment_intersects_polygon((0.2, 0.2), (0.3, 0.3), sq)  # fully inside


def test_degenerate_segment_rejected():
    with pytest.raises(GeometryError):
        segment_intersects_polygon((0.5, 0.5), (0.5, 0.5), UNIT)


def test_segments_vs_dense_sampling_oracle():
    rng = np.random.default_rng(11)
    poly = random_star_polygon(rng)
    a = rng.uniform(-1.5, 1.5, (300, 2))
    b = rng.uniform(-1.5, 1.5, (300, 2))
    got = segments_intersect_polygon(a, b, poly)
    t = np.linspace(0, 1, 10_000)
    for k in range(len(a)):
        samples = a[k] + t[:, None] * (b[k] - a[k])
        hit = bool(np.any(winding_numbers(samples, poly.vertices) != 0))
        if hit:
            assert got[k]
        elif got[k]:
            # only a grazing contact thinner than the sample pitch may slip between samples
            step = np.hypot(*(b[k] - a[k])) / len(t)
            assert segments_polygon_distance(a[k : k + 1], b[k : k + 1], poly)[0] <= step


def test_map_json_roundtrip(tmp_path):
    env = EnvironmentMap(rectangle(0, 0, 10, 10), (rectangle(2, 2, 4, 4),), 0.5)
    path = tmp_path / "m.json"
    save_map(env, path)
    data = json.loads(path.read_text())
    assert set(data) == {"boundary", "obstacles", "detection_radius"}
    back = load_map(path)
    assert back.to_json() == env.to_json()


def test_map_rejects_bad_radius_and_escaping_obstacle():
    with pytest.raises(GeometryError):
        EnvironmentMap(rectangle(0, 0, 1, 1), (), 0.0)
    with pytest.raises(GeometryError):
        EnvironmentMap(rectangle(0, 0, 1, 1), (rectangle(0.5, 0.5, 2, 2),), 0.1)


def test_map_missing_field():
    with pytest.raises(GeometryError):
        EnvironmentMap.from_dict({"boundary": [[0, 0], [1, 0], [0, 1]]})


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(-2, 2, allow_nan=False),
    y=st.floats(-2, 2, allow_nan=False),
    dx=st.floats(-3, 3, allow_nan=False),
    dy=st.floats(-3, 3, allow_nan=False),
)
def test_containment_is_translation_invariant(x, y, dx, dy):
    poly = Polygon([(0, 0), (1, 0), (1.5, 1), (0.5, 1.7), (-0.4, 0.9)])
    p = np.array([[x, y]])
    assume(distance_to_boundary(p, poly)[0] > 1e-9)
    inside = points_in_polygon(p, poly)[0]
    assert inside == (winding_number(p[0], poly.vertices) != 0)
    assert points_in_polygon(p + (dx, dy), Polygon(poly.vertices + (dx, dy)))[0] == inside
