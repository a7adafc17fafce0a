"""Planar geometry primitives on plain ``(x, y)`` float tuples.

Polygons are open rings: the closing vertex is not repeated.
"""

from __future__ import annotations

import math
from typing import Sequence

Point = tuple[float, float]
Ring = Sequence[Point]

EPS = 1e-9


def signed_area(ring: Ring) -> float:
    """Shoelace area; positive for counter-clockwise rings."""
    s = 0.0
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def orientation(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _sign(v: float, eps: float = EPS) -> int:
    if v > eps:
        return 1
    if v < -eps:
        return -1
    return 0


def _on_segment(a: Point, b: Point, p: Point, eps: float = EPS) -> bool:
    return (
        min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
        and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
    )


def segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    """Closed-segment intersection test, including touching and overlap."""
    o1 = _sign(orientation(a, b, c))
    o2 = _sign(orientation(a, b, d))
    o3 = _sign(orientation(c, d, a))
    o4 = _sign(orientation(c, d, b))
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _on_segment(a, b, c):
        return True
    if o2 == 0 and _on_segment(a, b, d):
        return True
    if o3 == 0 and _on_segment(c, d, a):
        return True
    if o4 == 0 and _on_segment(c, d, b):
        return True
    return False


def is_simple(ring: Ring) -> bool:
    """True when no two non-adjacent edges meet and adjacent edges only share their vertex."""
    n = len(ring)
    if n < 3:
        return False
    edges = [(ring[i], ring[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a, b = edges[i]
        for j in range(i + 1, n):
            c, d = edges[j]
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                # shared vertex is fine; a folded-back (collinear overlapping) pair is not
                shared = b if j == i + 1 else a
                other_i = a if j == i + 1 else b
                other_j = d if j == i + 1 else c
                if _sign(orientation(other_i, shared, other_j)) == 0:
                    ux, uy = other_i[0] - shared[0], other_i[1] - shared[1]
                    vx, vy = other_j[0] - shared[0], other_j[1] - shared[1]
                    if ux * vx + uy * vy > 0:
                        return False
                continue
            if segments_intersect(a, b, c, d):
                return False
    return True


def point_in_polygon(p: Point, ring: Ring, eps: float = EPS) -> int:
    """Return 1 if ``p`` is strictly inside, 0 on the boundary, -1 outside."""
    n = len(ring)
    px, py = p
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        if point_segment_distance(p, a, b) <= eps:
            return 0
    inside = False
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        if (y0 > py) != (y1 > py):
            xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if xc > px:
                inside = not inside
    return 1 if inside else -1


def closest_point_on_segment(p: Point, a: Point, b: Point) -> tuple[Point, float]:
    """Closest point to ``p`` on segment ``ab`` and the segment parameter t in [0, 1]."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    den = dx * dx + dy * dy
    if den == 0.0:
        return a, 0.0
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / den
    t = min(1.0, max(0.0, t))
    return (a[0] + t * dx, a[1] + t * dy), t


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    q, _ = closest_point_on_segment(p, a, b)
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _segment_params(p: Point, q: Point, a: Point, b: Point) -> list[float]:
    """Parameters along pq where it meets the closed segment ab."""
    rx, ry = q[0] - p[0], q[1] - p[1]
    sx, sy = b[0] - a[0], b[1] - a[1]
    den = rx * sy - ry * sx
    qpx, qpy = a[0] - p[0], a[1] - p[1]
    rr = rx * rx + ry * ry
    out = []
    if abs(den) <= EPS * math.sqrt(rr * (sx * sx + sy * sy)):
        # parallel: only collinear overlap matters
        if abs(qpx * ry - qpy * rx) > EPS * math.sqrt(rr):
            return out
        for v in (a, b):
            t = ((v[0] - p[0]) * rx + (v[1] - p[1]) * ry) / rr
            if -EPS <= t <= 1 + EPS:
                out.append(min(1.0, max(0.0, t)))
        return out
    t = (qpx * sy - qpy * sx) / den
    u = (qpx * ry - qpy * rx) / den
    if -EPS <= t <= 1 + EPS and -EPS <= u <= 1 + EPS:
        out.append(min(1.0, max(0.0, t)))
    return out


def segment_enters_interior(p: Point, q: Point, ring: Ring) -> bool:
    """True when the open segment pq passes through the open interior of ``ring``.

    Touching the boundary (including running along an edge) does not count.
    """
    n = len(ring)
    ts = {0.0, 1.0}
    for i in range(n):
        ts.update(_segment_params(p, q, ring[i], ring[(i + 1) % n]))
    cuts = sorted(ts)
    for t0, t1 in zip(cuts, cuts[1:]):
        if t1 - t0 <= 1e-12:
            continue
        tm = 0.5 * (t0 + t1)
        m = (p[0] + tm * (q[0] - p[0]), p[1] + tm * (q[1] - p[1]))
        if point_in_polygon(m, ring) == 1:
            return True
    return False


def heading_deg(origin: Point, target: Point) -> float:
    """Compass bearing from ``origin`` to ``target``: clockwise from +y (north), in [0, 360)."""
    h = math.degrees(math.atan2(target[0] - origin[0], target[1] - origin[1])) % 360.0
    return 0.0 if h >= 360.0 else h


def angle_between_deg(u: Point, v: Point) -> float:
    """Unsigned angle between two non-zero vectors, in [0, 180]."""
    dot = u[0] * v[0] + u[1] * v[1]
    cross = u[0] * v[1] - u[1] * v[0]
    return math.degrees(math.atan2(abs(cross), dot))
