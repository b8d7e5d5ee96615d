"""Planar geometry for the tabletop simulator.

Oriented rectangles and discs, convex polygon clipping for exact
intersection areas, and the disc/rectangle penetration queries used by the
quasi-static pushing model. Everything is float64 and allocation-light;
the simulator calls these every control tick.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DegenerateRectangle


def rect_corners(cx: float, cy: float, w: float, h: float, theta: float) -> np.ndarray:
    """Corners of an oriented rectangle, CCW order, shape (4, 2)."""
    hw, hh = 0.5 * w, 0.5 * h
    c, s = math.cos(theta), math.sin(theta)
    local = ((hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh))
    return np.array([(cx + c * x - s * y, cy + s * x + c * y)
                     for x, y in local])


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area of a simple polygon given as (n, 2) vertices."""
    if len(poly) < 3:
        return 0.0
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    # Sutherland-Hodgman: clip `subject` against each edge of convex `clip`.
    # `clip` must wind CCW so the inside is to the left of every edge.
    output = [tuple(p) for p in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        input_pts = output
        output = []
        prev = input_pts[-1]
        prev_side = ex * (prev[1] - ay) - ey * (prev[0] - ax)
        for cur in input_pts:
            cur_side = ex * (cur[1] - ay) - ey * (cur[0] - ax)
            if cur_side >= 0.0:
                if prev_side < 0.0:
                    t = prev_side / (prev_side - cur_side)
                    output.append((prev[0] + t * (cur[0] - prev[0]),
                                   prev[1] + t * (cur[1] - prev[1])))
                output.append(cur)
            elif prev_side >= 0.0:
                t = prev_side / (prev_side - cur_side)
                output.append((prev[0] + t * (cur[0] - prev[0]),
                               prev[1] + t * (cur[1] - prev[1])))
            prev, prev_side = cur, cur_side
    return np.array(output) if output else np.empty((0, 2))


def rect_intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    return polygon_area(clip_convex(a, b))


def iou(rect_a: tuple[float, float, float, float, float],
        rect_b: tuple[float, float, float, float, float]) -> float:
    """Intersection over union of two oriented rectangles.

    Each rectangle is (cx, cy, w, h, theta). Exact up to float rounding via
    convex polygon clipping. Raises DegenerateRectangle when a width or
    height is not strictly positive.
    """
    for r in (rect_a, rect_b):
        if not (r[2] > 0.0 and r[3] > 0.0):
            raise DegenerateRectangle(f"rectangle sides must be positive, got {r}")
    ca = rect_corners(*rect_a)
    cb = rect_corners(*rect_b)
    inter = rect_intersection_area(ca, cb)
    area_a = rect_a[2] * rect_a[3]
    area_b = rect_b[2] * rect_b[3]
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def point_in_rect(px: float, py: float, cx: float, cy: float,
                  w: float, h: float, theta: float, strict: bool = False) -> bool:
    # Transform the point into the rectangle frame and box-test.
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = px - cx, py - cy
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    if strict:
        return abs(lx) < 0.5 * w and abs(ly) < 0.5 * h
    return abs(lx) <= 0.5 * w and abs(ly) <= 0.5 * h


def disc_rect_penetration(px: float, py: float, radius: float,
                          cx: float, cy: float, w: float, h: float,
                          theta: float) -> tuple[float, tuple[float, float], tuple[float, float]]:
    """Penetration of a disc into an oriented rectangle.

    Returns (depth, push_dir, contact_point) in world coordinates. depth is
    how far the rectangle must translate along push_dir (a unit vector
    pointing away from the disc) to separate; depth <= 0 means no contact.
    contact_point is the point on the rectangle boundary nearest the disc
    center.
    """
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = px - cx, py - cy
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    hw, hh = 0.5 * w, 0.5 * h

    qx = min(max(lx, -hw), hw)
    qy = min(max(ly, -hh), hh)

    if qx != lx or qy != ly:
        # disc center outside the rectangle
        ex, ey = lx - qx, ly - qy
        dist = math.hypot(ex, ey)
        depth = radius - dist
        if depth <= 0.0:
            return depth, (0.0, 0.0), (0.0, 0.0)
        # push the rectangle away from the disc: opposite of (center - closest)
        nx, ny = -ex / dist, -ey / dist
    else:
        # disc center inside: push out along the nearest face normal
        gaps = (hw - lx, lx + hw, hh - ly, ly + hh)  # +x, -x, +y, -y faces
        k = int(np.argmin(gaps))
        if k == 0:
            nx, ny, qx, qy = -1.0, 0.0, hw, ly
        elif k == 1:
            nx, ny, qx, qy = 1.0, 0.0, -hw, ly
        elif k == 2:
            nx, ny, qx, qy = 0.0, -1.0, lx, hh
        else:
            nx, ny, qx, qy = 0.0, 1.0, lx, -hh
        depth = gaps[k] + radius

    world_n = (c * nx - s * ny, s * nx + c * ny)
    world_q = (cx + c * qx - s * qy, cy + s * qx + c * qy)
    return depth, world_n, world_q


def disc_disc_penetration(ax: float, ay: float, ar: float,
                          bx: float, by: float, br: float) -> tuple[float, tuple[float, float]]:
    """Depth and push direction (unit, away from disc a) for two discs."""
    dx, dy = bx - ax, by - ay
    dist = math.hypot(dx, dy)
    depth = ar + br - dist
    if depth <= 0.0:
        return depth, (0.0, 0.0)
    if dist < 1e-12:
        return depth, (1.0, 0.0)
    return depth, (dx / dist, dy / dist)


def rects_overlap(a: tuple[float, float, float, float, float],
                  b: tuple[float, float, float, float, float]) -> bool:
    return rect_intersection_area(rect_corners(*a), rect_corners(*b)) > 1e-12


def disc_rect_overlap(px: float, py: float, radius: float,
                      rect: tuple[float, float, float, float, float]) -> bool:
    depth, _, _ = disc_rect_penetration(px, py, radius, *rect)
    return depth > 1e-12


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi
