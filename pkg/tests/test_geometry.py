import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from floorsurvey.geometry import (
    Floorplan,
    FloorplanError,
    Pose2D,
    Room,
    acute_angle_to_best_wall,
    acute_angles_to_room_walls,
    containing_room,
    containing_rooms,
    parse_floorplan,
    points_in_polygon,
    segment_crosses_wall,
    segments_cross_walls,
    wrap_angle,
)

from conftest import box


def test_wrap_angle_known_values():
    # range is [-pi, pi)
    assert wrap_angle(0.0) == 0.0
    assert math.isclose(wrap_angle(3 * math.pi), -math.pi)
    assert math.isclose(wrap_angle(-3 * math.pi), -math.pi)
    assert math.isclose(wrap_angle(math.pi + 0.1), -math.pi + 0.1)


@given(st.floats(-50, 50), st.integers(-8, 8))
def test_wrap_angle_periodic(theta, k):
    a = wrap_angle(theta)
    b = wrap_angle(theta + 2 * math.pi * k)
    assert -math.pi - 1e-12 <= a < math.pi + 1e-12
    assert math.isclose(a, b, abs_tol=1e-9)


def test_wrap_angle_vectorised():
    out = wrap_angle(np.array([0.0, 3 * math.pi, -0.5]))
    assert np.allclose(out, [0.0, -math.pi, -0.5])


def test_pose2d_fields():
    p = Pose2D(1.0, 2.0, 0.5)
    assert (p.x, p.y, p.theta) == (1.0, 2.0, 0.5)


# ---------------------------------------------------------------- floorplan

def test_floorplan_requires_contiguous_ids():
    with pytest.raises(FloorplanError):
        Floorplan(np.zeros((0, 4)), [Room(1, "a", box(0, 0, 1, 1))])


def test_floorplan_rejects_self_intersecting_polygon():
    bowtie = np.array([[0, 0], [2, 2], [2, 0], [0, 2]], dtype=float)
    with pytest.raises(FloorplanError):
        Floorplan(np.zeros((0, 4)), [Room(0, "bow", bowtie)])


def test_floorplan_bounds(two_room_plan):
    assert two_room_plan.bounds == (0.0, 0.0, 10.0, 10.0)


def test_parse_floorplan_roundtrip_small():
    text = """
# comment
wall,0,0,10,0
wall,0,0,0,10
room,0,main,0,0,10,0,10,10,0,10
"""
    fp = parse_floorplan(text)
    assert len(fp.walls) == 2
    assert len(fp.rooms) == 1
    assert fp.rooms[0].name == "main"


def test_parse_floorplan_error_carries_line_number():
    with pytest.raises(FloorplanError, match="line 2"):
        parse_floorplan("wall,0,0,1,0\nwall,oops,0,1,0\n")
    with pytest.raises(FloorplanError, match="unknown record"):
        parse_floorplan("door,0,0,1,1\n")
    with pytest.raises(FloorplanError, match="duplicate room ids"):
        parse_floorplan(
            "room,0,a,0,0,1,0,1,1\nroom,0,b,2,2,3,2,3,3\n"
        )


# ------------------------------------------------------- segment crossing

def _cross_oracle(p0, p1, q0, q1):
    """Proper or touching segment intersection, by orientation tests."""
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    d1, d2 = orient(q0, q1, p0), orient(q0, q1, p1)
    d3, d4 = orient(p0, p1, q0), orient(p0, p1, q1)
    if d1 != d2 and d3 != d4:
        return True
    if d1 == 0 and on_seg(q0, q1, p0):
        return True
    if d2 == 0 and on_seg(q0, q1, p1):
        return True
    if d3 == 0 and on_seg(p0, p1, q0):
        return True
    if d4 == 0 and on_seg(p0, p1, q1):
        return True
    return False


def test_segments_cross_walls_matches_oracle():
    rng = np.random.default_rng(5)
    walls = rng.uniform(0, 10, size=(6, 4))
    p0s = rng.uniform(0, 10, size=(300, 2))
    p1s = rng.uniform(0, 10, size=(300, 2))
    got = segments_cross_walls(p0s, p1s, walls)
    for i in range(len(p0s)):
        want = any(
            _cross_oracle(p0s[i], p1s[i], w[:2], w[2:]) for w in walls
        )
        assert got[i] == want, i


def test_segment_crosses_wall_door_gap(two_room_plan):
    # through the doorway: no crossing; through the dividing wall: crossing
    assert not segment_crosses_wall(two_room_plan, (4, 5), (6, 5))
    assert segment_crosses_wall(two_room_plan, (4, 2), (6, 2))
    assert not segment_crosses_wall(two_room_plan, (1, 1), (4, 9))


# --------------------------------------------------------- point in room

def _pip_oracle(vs, x, y):
    """Ray casting with boundary counted inside."""
    n = len(vs)
    for k in range(n):
        a, b = vs[k], vs[(k + 1) % n]
        cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0])
        if abs(cross) < 1e-12 and min(a[0], b[0]) - 1e-12 <= x <= max(a[0], b[0]) + 1e-12 \
                and min(a[1], b[1]) - 1e-12 <= y <= max(a[1], b[1]) + 1e-12:
            return True
    inside = False
    for k in range(n):
        a, b = vs[k], vs[(k + 1) % n]
        if (a[1] > y) != (b[1] > y):
            xi = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if x < xi:
                inside = not inside
    return inside


def test_points_in_polygon_matches_oracle():
    lshape = np.array([[0, 0], [4, 0], [4, 2], [2, 2], [2, 4], [0, 4]], dtype=float)
    rng = np.random.default_rng(9)
    pts = rng.uniform(-1, 5, size=(400, 2))
    got = points_in_polygon(lshape, pts)
    want = np.array([_pip_oracle(lshape, *p) for p in pts])
    assert np.array_equal(got, want)


def test_containing_room_basics(two_room_plan):
    assert containing_room(two_room_plan, (2, 5)) == 0
    assert containing_room(two_room_plan, (8, 5)) == 1
    assert containing_room(two_room_plan, (20, 20)) is None


def test_containing_rooms_vector_matches_scalar(two_room_plan):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2, 12, size=(200, 2))
    got = containing_rooms(two_room_plan, pts)
    for i, p in enumerate(pts):
        scalar = containing_room(two_room_plan, p)
        assert got[i] == (-1 if scalar is None else scalar)


# ------------------------------------------------------------ wall angles

def test_acute_angle_square_room(square_plan):
    # heading parallel to a wall -> 0; 30 deg off -> 30 deg; nearly
    # perpendicular -> distance to the other wall family
    assert math.isclose(acute_angle_to_best_wall(square_plan, (5, 5), 0.0), 0.0, abs_tol=1e-12)
    a = acute_angle_to_best_wall(square_plan, (5, 5), math.radians(30))
    assert math.isclose(a, math.radians(30), abs_tol=1e-9)
    a = acute_angle_to_best_wall(square_plan, (5, 5), math.radians(80))
    assert math.isclose(a, math.radians(10), abs_tol=1e-9)


def test_acute_angle_outside_rooms(square_plan):
    assert acute_angle_to_best_wall(square_plan, (50, 50), 0.3) is None
    out = acute_angles_to_room_walls(square_plan, np.array([[50.0, 50.0]]), np.array([0.3]))
    assert np.isnan(out[0])


def test_acute_angles_vector_matches_scalar(square_plan):
    rng = np.random.default_rng(1)
    pts = rng.uniform(1, 9, size=(50, 2))
    heads = rng.uniform(-math.pi, math.pi, 50)
    out = acute_angles_to_room_walls(square_plan, pts, heads)
    for i in range(50):
        assert math.isclose(out[i], acute_angle_to_best_wall(square_plan, pts[i], heads[i]),
                            abs_tol=1e-9)
