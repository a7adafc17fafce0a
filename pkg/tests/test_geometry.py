import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from shapely.geometry import LineString, Point as SPoint, Polygon

from heritage_assess.geometry import (
    angle_between_deg,
    closest_point_on_segment,
    heading_deg,
    is_simple,
    point_in_polygon,
    segment_enters_interior,
    segments_intersect,
    signed_area,
)

SQUARE = [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)]
L_SHAPE = [(0, 0), (6, 0), (6, 2), (2, 2), (2, 5), (0, 5)]

coord = st.integers(-20, 20).map(float)
pt = st.tuples(coord, coord)


def test_signed_area_orientation():
    assert signed_area(SQUARE) == 16.0
    assert signed_area(SQUARE[::-1]) == -16.0
    assert signed_area(L_SHAPE) == 18.0


def test_bowtie_is_not_simple():
    assert is_simple(SQUARE)
    assert is_simple(L_SHAPE)
    assert not is_simple([(0, 0), (2, 2), (2, 0), (0, 2)])


def test_point_in_polygon_three_way():
    assert point_in_polygon((2, 2), SQUARE) == 1
    assert point_in_polygon((4, 2), SQUARE) == 0
    assert point_in_polygon((5, 2), SQUARE) == -1
    assert point_in_polygon((3, 3), L_SHAPE) == -1


def test_closest_point_clamps_to_endpoint():
    q, t = closest_point_on_segment((0, 0), (3, 4), (10, 4))
    assert q == (3.0, 4.0) and t == 0.0


def test_heading_compass_convention():
    assert heading_deg((0, 0), (0, 1)) == 0.0
    assert heading_deg((0, 0), (1, 0)) == 90.0
    assert heading_deg((0, 0), (0, -1)) == 180.0
    assert heading_deg((0, 0), (-1, 0)) == 270.0


def test_angle_between():
    assert angle_between_deg((1, 0), (0, 1)) == pytest.approx(90.0)
    assert angle_between_deg((1, 0), (-1, 0)) == pytest.approx(180.0)


def test_boundary_contact_does_not_enter():
    # running along an edge, or starting on the wall and leaving outward
    assert not segment_enters_interior((0, 0), (4, 0), SQUARE)
    assert not segment_enters_interior((2, 0), (2, -5), SQUARE)
    assert segment_enters_interior((2, -1), (2, 5), SQUARE)
    # the notch of the L: a chord between the two arms stays outside
    assert not segment_enters_interior((3, 2), (2, 3), L_SHAPE)


@given(pt, pt)
def test_segments_intersect_matches_shapely(a, b):
    c, d = (0.0, -3.0), (5.0, 7.0)
    if a == b:
        return
    assert segments_intersect(a, b, c, d) == LineString([a, b]).intersects(LineString([c, d]))


@given(pt, pt)
def test_enters_interior_matches_shapely(p, q):
    if p == q:
        return
    poly = Polygon(L_SHAPE)
    seg = LineString([p, q])
    want = not seg.intersection(poly).difference(poly.boundary).is_empty
    assert segment_enters_interior(p, q, L_SHAPE) == want


@given(pt)
def test_point_in_polygon_matches_shapely(p):
    poly = Polygon(L_SHAPE)
    want = 0 if poly.boundary.distance(SPoint(p)) < 1e-12 else (1 if poly.contains(SPoint(p)) else -1)
    assert point_in_polygon(p, L_SHAPE) == want


@given(st.floats(0, 2 * math.pi, exclude_max=True))
def test_heading_rotates_with_vector(theta):
    # unit vector at bearing theta (clockwise from north)
    target = (math.sin(theta), math.cos(theta))
    h = heading_deg((0, 0), target)
    assert 0.0 <= h < 360.0
    diff = (h - math.degrees(theta) + 180.0) % 360.0 - 180.0
    assert abs(diff) < 1e-9
