import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import iou_rasterized, random_rect_pairs
from skilldesk.errors import DegenerateRectangle
from skilldesk.sim.geometry import (
    clip_convex,
    disc_disc_penetration,
    disc_rect_penetration,
    iou,
    point_in_rect,
    polygon_area,
    rect_corners,
    rects_overlap,
    wrap_angle,
)


def test_rect_corners_axis_aligned():
    corners = rect_corners(0.0, 0.0, 2.0, 1.0, 0.0)
    assert sorted(map(tuple, corners.tolist())) == [
        (-1.0, -0.5), (-1.0, 0.5), (1.0, -0.5), (1.0, 0.5)]


def test_polygon_area_square():
    sq = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
    assert polygon_area(sq) == pytest.approx(1.0)


def test_clip_identical_squares():
    sq = rect_corners(0, 0, 1, 1, 0)
    out = clip_convex(sq, sq)
    assert polygon_area(out) == pytest.approx(1.0, abs=1e-12)


def test_iou_identical_is_one():
    r = (0.3, -0.2, 0.5, 0.25, 0.7)
    assert iou(r, r) == pytest.approx(1.0, abs=1e-12)


def test_iou_disjoint_is_zero():
    assert iou((0, 0, 1, 1, 0), (5, 5, 1, 1, 0.3)) == 0.0


def test_iou_half_overlap_analytic():
    # two 2x2 squares offset by 1 along x: inter 2, union 6
    assert iou((0, 0, 2, 2, 0), (1, 0, 2, 2, 0)) == pytest.approx(1 / 3, abs=1e-12)


def test_iou_square_rotated_45_analytic():
    # concentric unit squares rotated 45 degrees: IoU is exactly 1/sqrt(2)
    got = iou((0, 0, 1, 1, 0), (0, 0, 1, 1, math.pi / 4))
    assert got == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_iou_square_rotated_90_is_one():
    got = iou((0.2, 0.1, 0.4, 0.4, 0.0), (0.2, 0.1, 0.4, 0.4, math.pi / 2))
    assert got == pytest.approx(1.0, abs=1e-9)


def test_iou_degenerate_rectangle_raises():
    with pytest.raises(DegenerateRectangle):
        iou((0, 0, 0.0, 1, 0), (0, 0, 1, 1, 0))
    with pytest.raises(DegenerateRectangle):
        iou((0, 0, 1, 1, 0), (0, 0, 1, -2.0, 0))


def test_iou_matches_rasterization_oracle_sample():
    # small sweep here; the full 1000-pair 2000x2000 sweep runs in the
    # acceptance suite
    for a, b in random_rect_pairs(40, seed=7):
        exact = iou(a, b)
        approx = iou_rasterized(a, b, n=500)
        assert abs(exact - approx) < 2e-2


rect_strategy = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1),
    st.floats(0.05, 2.0), st.floats(0.05, 2.0),
    st.floats(-math.pi, math.pi),
)


@settings(max_examples=100, deadline=None)
@given(a=rect_strategy, b=rect_strategy)
def test_iou_symmetry_property(a, b):
    assert abs(iou(a, b) - iou(b, a)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(a=rect_strategy, b=rect_strategy,
       scale=st.floats(0.01, 100.0))
def test_iou_scale_invariance_property(a, b, scale):
    sa = (a[0] * scale, a[1] * scale, a[2] * scale, a[3] * scale, a[4])
    sb = (b[0] * scale, b[1] * scale, b[2] * scale, b[3] * scale, b[4])
    assert abs(iou(a, b) - iou(sa, sb)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(a=rect_strategy, b=rect_strategy)
def test_iou_bounded_property(a, b):
    v = iou(a, b)
    assert 0.0 <= v <= 1.0 + 1e-12


def test_point_in_rect_rotated():
    # rect centered at origin, 2x1, rotated 90 degrees: x extent is now 0.5
    assert point_in_rect(0.0, 0.9, 0, 0, 2, 1, math.pi / 2)
    assert not point_in_rect(0.9, 0.0, 0, 0, 2, 1, math.pi / 2)


def test_point_in_rect_strict_boundary():
    assert point_in_rect(1.0, 0.0, 0, 0, 2, 2, 0.0)
    assert not point_in_rect(1.0, 0.0, 0, 0, 2, 2, 0.0, strict=True)


def test_disc_rect_penetration_no_contact():
    depth, _, _ = disc_rect_penetration(5.0, 0.0, 0.1, 0, 0, 1, 1, 0.0)
    assert depth <= 0.0


def test_disc_rect_penetration_resolves_outside_center():
    # disc of radius 0.2 at x=0.6 against unit square: overlap 0.1
    depth, push, contact = disc_rect_penetration(0.6, 0.0, 0.2, 0, 0, 1, 1, 0.0)
    assert depth == pytest.approx(0.1, abs=1e-12)
    assert push == pytest.approx((-1.0, 0.0))
    assert contact == pytest.approx((0.5, 0.0))
    # translating the rect by depth*push separates the pair exactly
    depth2, _, _ = disc_rect_penetration(
        0.6, 0.0, 0.2, 0 + depth * push[0], 0 + depth * push[1], 1, 1, 0.0)
    assert abs(depth2) < 1e-12


def test_disc_rect_penetration_center_inside():
    depth, push, _ = disc_rect_penetration(0.4, 0.0, 0.1, 0, 0, 1, 1, 0.0)
    # nearest face is +x at gap 0.1; rect must move -x by gap + radius
    assert depth == pytest.approx(0.2, abs=1e-12)
    assert push == pytest.approx((-1.0, 0.0))
    depth2, _, _ = disc_rect_penetration(0.4, 0.0, 0.1, depth * push[0], 0, 1, 1, 0.0)
    assert abs(depth2) < 1e-9


def test_disc_disc_penetration():
    depth, push = disc_disc_penetration(0, 0, 0.5, 0.7, 0, 0.5)
    assert depth == pytest.approx(0.3)
    assert push == pytest.approx((1.0, 0.0))


def test_rects_overlap():
    assert rects_overlap((0, 0, 1, 1, 0), (0.5, 0.5, 1, 1, 0.3))
    assert not rects_overlap((0, 0, 1, 1, 0), (3, 3, 1, 1, 0.3))


def test_wrap_angle():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.3 + 4 * math.pi) == pytest.approx(0.3)
