"""Small planar-geometry helpers used by the design model."""

from __future__ import annotations

import math
from typing import Sequence

Point = tuple[float, float]

EPS = 1e-6


def signed_area(poly: Sequence[Point]) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def bbox(points: Sequence[Point]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return min(xs), min(ys), max(xs), max(ys)


def point_in_polygon(pt: Point, poly: Sequence[Point]) -> bool:
    x, y = pt
    inside = False
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if xc > x:
                inside = not inside
    return inside


def close(a: Point, b: Point, tol: float = EPS) -> bool:
    return abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol


def simplify(poly: Sequence[Point], tol: float = EPS) -> list[Point]:
    """Drop repeated and collinear vertices of a closed polygon."""
    pts = []
    for p in poly:
        if not pts or not close(pts[-1], p, tol):
            pts.append((float(p[0]), float(p[1])))
    if len(pts) > 1 and close(pts[0], pts[-1], tol):
        pts.pop()
    changed = True
    while changed and len(pts) > 3:
        changed = False
        out = []
        n = len(pts)
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            scale = max(math.dist(a, b), math.dist(b, c), 1.0)
            if abs(cross) <= tol * scale:
                changed = True
                continue
            out.append(b)
        pts = out
    return pts


def canonical_polygon(poly: Sequence[Point], tol: float = EPS) -> list[Point]:
    """Simplified, negatively oriented, starting at the lexicographic minimum."""
    pts = simplify(poly, tol)
    if signed_area(pts) > 0:
        pts.reverse()
    key = min(range(len(pts)), key=lambda i: (round(pts[i][0] / tol), round(pts[i][1] / tol)))
    return pts[key:] + pts[:key]


def same_polygon(a: Sequence[Point], b: Sequence[Point], tol: float = EPS) -> bool:
    ca, cb = canonical_polygon(a, tol), canonical_polygon(b, tol)
    return len(ca) == len(cb) and all(close(p, q, 10 * tol) for p, q in zip(ca, cb))


def unit(v: Point) -> Point:
    n = math.hypot(v[0], v[1])
    return (v[0] / n, v[1] / n)


def dot(a: Point, b: Point) -> float:
    return a[0] * b[0] + a[1] * b[1]


def cross(a: Point, b: Point) -> float:
    return a[0] * b[1] - a[1] * b[0]
