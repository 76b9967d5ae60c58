import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetaroute.errors import ContractViolation, DegenerateInputError
from thetaroute.geometry import (
    CanonicalTriangle,
    OrientedConeLine,
    Point,
    Side,
    as_point_set,
    bisector_angle,
    bisector_projection,
    canonical_triangle,
    clockwise_angle,
    cone_index,
    cone_indices,
    contains,
    side_of_line,
    triangle_sides,
)

R3 = math.sqrt(3.0)
coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_cone_index_examples():
    assert cone_index((0, 0), (0, 1)) == 0
    assert cone_index((0, 0), (0, -1)) == 3
    c60 = (math.cos(math.radians(60)), math.sin(math.radians(60)))
    assert cone_index((0, 0), c60) == 0
    # the upper ray belongs to the next cone
    c120 = (math.cos(math.radians(120)), math.sin(math.radians(120)))
    assert cone_index((0, 0), c120) == 1


def test_cone_index_errors():
    with pytest.raises(DegenerateInputError):
        cone_index((1, 1), (1, 1))
    with pytest.raises(ContractViolation):
        cone_index((0, 0), (1, 0), k=1)


def test_cone_labels_counterclockwise():
    for c in range(6):
        a = bisector_angle(c)
        assert cone_index((0, 0), (math.cos(a), math.sin(a))) == c


def test_vectorised_cones_match_scalar(rng):
    d = rng.normal(size=(2000, 2))
    for k in (2, 3, 5, 6, 9):
        got = cone_indices(d[:, 0], d[:, 1], k)
        want = [cone_index((0, 0), p, k) for p in d]
        assert got.tolist() == want


def test_bisector_projection_examples():
    assert bisector_projection((0, 0), (0, 2), 0) == pytest.approx(2)
    c60 = (math.cos(math.radians(60)), math.sin(math.radians(60)))
    assert bisector_projection((0, 0), c60, 0) == pytest.approx(R3 / 2)
    assert bisector_projection((0, 0), (0.3, 1.1), 0) == pytest.approx(1.1)
    with pytest.raises(ContractViolation):
        bisector_projection((0, 0), (0, -1), 0)


def test_canonical_triangle_examples():
    t = canonical_triangle((0, 0), (0, 1))
    assert (t.apex, t.cone, t.depth) == (Point(0, 0), 0, pytest.approx(1))
    _, right, left = t.corners
    assert right == pytest.approx((1 / R3, 1))
    assert left == pytest.approx((-1 / R3, 1))
    t = canonical_triangle((0, 0), (0, -1))
    assert (t.cone, t.depth) == (3, pytest.approx(1))
    t = canonical_triangle((0, 0), (0.2, 0.9))
    assert (t.cone, t.depth) == (0, pytest.approx(0.9))
    with pytest.raises(DegenerateInputError):
        canonical_triangle((0, 0), (0, 0))


def test_contains_examples():
    t = canonical_triangle((0, 0), (0, 1))
    assert contains(t, (0, 0.5))
    assert not contains(t, (0, 1.5))
    assert contains(t, (1 / R3, 1), closed=True)
    assert not contains(t, (1 / R3, 1), closed=False)


def test_side_of_line_examples():
    horiz = OrientedConeLine(Point(0, 0), 0)
    assert side_of_line(horiz, (1, -0.5)) is Side.POSITIVE
    assert side_of_line(horiz, (1, 0.5)) is Side.NEGATIVE
    steep = OrientedConeLine(Point(0, 0), 1)
    assert side_of_line(steep, (0, 1)) is Side.POSITIVE
    for d in range(6):
        line = OrientedConeLine(Point(0.3, -2), d)
        assert side_of_line(line, (0.3, -2)) is Side.ON
    # slope -sqrt 3: positive side above as well
    assert side_of_line(OrientedConeLine(Point(0, 0), 2), (0, 1)) is Side.POSITIVE
    # the odd half-graph flips the positive side
    assert side_of_line(OrientedConeLine(Point(0, 0), 0, 1), (1, -0.5)) is Side.NEGATIVE


def test_third_cone():
    assert OrientedConeLine(Point(0, 0), 0).third_cone == 0
    assert OrientedConeLine(Point(0, 0), 1).third_cone == 4
    assert OrientedConeLine(Point(0, 0), 2).third_cone == 2


def test_clockwise_angle_examples():
    assert math.degrees(clockwise_angle((1, 0), (0, -1))) == pytest.approx(90)
    assert clockwise_angle((1, 0), (1, 0)) == 0
    assert math.degrees(clockwise_angle((1, 0), (0, 1))) == pytest.approx(270)
    with pytest.raises(DegenerateInputError):
        clockwise_angle((0, 0), (1, 0))


def test_as_point_set_rejects_non_finite():
    with pytest.raises(DegenerateInputError):
        as_point_set([(0, 0), (math.nan, 1)])
    with pytest.raises(DegenerateInputError):
        as_point_set([(0, math.inf)])


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord, st.integers(2, 12))
def test_cone_partition(ax, ay, qx, qy, k):
    if (ax, ay) == (qx, qy):
        return
    c = cone_index((ax, ay), (qx, qy), k)
    assert 0 <= c < k
    # exactly one half-open cone holds the direction
    ang = math.atan2(qy - ay, qx - ax)
    hits = 0
    for i in range(k):
        lo = bisector_angle(i, k) - math.pi / k
        off = (ang - lo) % (2 * math.pi)
        if off < 2 * math.pi / k - 1e-12 or off > 2 * math.pi - 1e-12:
            hits += 1
    assert hits >= 1


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord)
def test_homothety_and_projection_bounds(px, py, qx, qy):
    if math.hypot(qx - px, qy - py) < 1e-6:
        return
    t = canonical_triangle((px, py), (qx, qy))
    c = t.cone
    a = bisector_angle(c) - math.pi / 2
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    apex = np.array([px, py])
    want_right = apex + t.depth * rot @ np.array([1 / R3, 1])
    want_left = apex + t.depth * rot @ np.array([-1 / R3, 1])
    _, right, left = t.corners
    assert np.allclose(right, want_right, atol=1e-12 * (1 + t.depth))
    assert np.allclose(left, want_left, atol=1e-12 * (1 + t.depth))
    d = math.hypot(qx - px, qy - py)
    assert t.depth <= d + 1e-12
    assert d <= 2 / R3 * t.depth + 1e-9


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord, coord, coord)
def test_contains_matches_sides(px, py, qx, qy, wx, wy):
    if math.hypot(qx - px, qy - py) < 1e-3:
        return
    t = canonical_triangle((px, py), (qx, qy))
    if t.depth < 1e-3:
        return
    sides = triangle_sides(t)
    inside = [line.offset((wx, wy)) for line in sides]
    # the triangle is the intersection of the three closed half-planes, one
    # of which may be the negative side of its line
    apex, right, left = t.corners
    centroid = ((apex[0] + right[0] + left[0]) / 3, (apex[1] + right[1] + left[1]) / 3)
    signs = [1 if line.offset(centroid) > 0 else -1 for line in sides]
    margins = [s * v for s, v in zip(signs, inside)]
    if min(abs(m) for m in margins) < 1e-9:
        return
    assert contains(t, (wx, wy)) == all(m > 0 for m in margins)
