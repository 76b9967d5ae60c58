"""Planar predicates, cones and canonical triangles.

Cones are labelled counterclockwise starting from cone 0, whose bisector
points straight up.  Cone ``i`` of a ``k``-cone partition covers the polar
angles ``[90 + 360 i/k - 180/k, 90 + 360 i/k + 180/k)`` degrees: the lower
ray belongs to the cone, the upper ray to the next one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation, DegenerateInputError

EPS_GEOM = 1e-12
TWO_PI = 2.0 * math.pi
SQRT3 = math.sqrt(3.0)


class Point(NamedTuple):
    x: float
    y: float


def as_point(p: Sequence[float]) -> Point:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DegenerateInputError(f"non-finite point {p!r}")
    return Point(x, y)


def as_point_set(points) -> np.ndarray:
    """Return an ``(n, 2)`` float array, rejecting NaN and infinities."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2))
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError("point set contains non-finite coordinates")
    return arr


def normalize_angle(a: float) -> float:
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    return 0.0 if a >= TWO_PI else a


def bisector_angle(cone: int, k: int = 6) -> float:
    return math.pi / 2 + TWO_PI * cone / k


def _cone_from_angle(angle: float, k: int) -> int:
    width = TWO_PI / k
    rel = normalize_angle(angle - (math.pi / 2 - width / 2)) / width
    nearest = round(rel)
    if abs(rel - nearest) * width <= EPS_GEOM:
        rel = nearest
    return int(math.floor(rel)) % k


def cone_index(apex, q, k: int = 6) -> int:
    """Index of the cone of ``apex`` that contains ``q``."""
    if k < 2:
        raise ContractViolation("k must be at least 2")
    dx, dy = q[0] - apex[0], q[1] - apex[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateInputError("cone_index of coincident points")
    return _cone_from_angle(math.atan2(dy, dx), k)


def cone_indices(dx: np.ndarray, dy: np.ndarray, k: int = 6) -> np.ndarray:
    """Vectorised :func:`cone_index` over displacement arrays."""
    width = TWO_PI / k
    rel = np.mod(np.arctan2(dy, dx) - (math.pi / 2 - width / 2), TWO_PI)
    rel = np.where(rel >= TWO_PI, 0.0, rel) / width
    nearest = np.round(rel)
    rel = np.where(np.abs(rel - nearest) * width <= EPS_GEOM, nearest, rel)
    return np.floor(rel).astype(np.int64) % k


def cone_parity(cone: int) -> int:
    """0 for positive (even) cones, 1 for negative (odd) ones."""
    return cone % 2


def in_closed_cone(apex, q, cone: int, k: int = 6) -> bool:
    dx, dy = q[0] - apex[0], q[1] - apex[1]
    if dx == 0.0 and dy == 0.0:
        return True
    off = normalize_angle(math.atan2(dy, dx) - bisector_angle(cone, k))
    off = min(off, TWO_PI - off)
    return off <= math.pi / k + 1e-9


def bisector_projection(apex, q, cone: int, k: int = 6) -> float:
    """Length of the projection of ``apex -> q`` onto the cone bisector."""
    if not in_closed_cone(apex, q, cone, k):
        raise ContractViolation(f"point {tuple(q)} is not in cone {cone} of {tuple(apex)}")
    b = bisector_angle(cone, k)
    d = (q[0] - apex[0]) * math.cos(b) + (q[1] - apex[1]) * math.sin(b)
    return max(d, 0.0)


@dataclass(frozen=True)
class CanonicalTriangle:
    """The triangle cut from cone ``cone`` of ``apex`` at bisector depth ``depth``."""

    apex: Point
    cone: int
    depth: float
    k: int = 6

    @property
    def corners(self) -> tuple[Point, Point, Point]:
        b = bisector_angle(self.cone, self.k)
        half = math.tan(math.pi / self.k) * self.depth
        ux, uy = math.cos(b), math.sin(b)
        cx, cy = self.apex.x + self.depth * ux, self.apex.y + self.depth * uy
        # (-uy, ux) is the bisector rotated a quarter turn counterclockwise
        left = Point(cx - half * uy, cy + half * ux)
        right = Point(cx + half * uy, cy - half * ux)
        return self.apex, right, left

    @property
    def parity(self) -> int:
        return self.cone % 2


def canonical_triangle(p, q, k: int = 6) -> CanonicalTriangle:
    p = as_point(p)
    if p[0] == q[0] and p[1] == q[1]:
        raise DegenerateInputError("canonical triangle of coincident points")
    cone = cone_index(p, q, k)
    return CanonicalTriangle(p, cone, bisector_projection(p, q, cone, k), k)


def contains(tri: CanonicalTriangle, w, closed: bool = True) -> bool:
    b = bisector_angle(tri.cone, tri.k)
    ux, uy = math.cos(b), math.sin(b)
    dx, dy = w[0] - tri.apex.x, w[1] - tri.apex.y
    along = dx * ux + dy * uy
    across = abs(-dx * uy + dy * ux)
    # distance from w to each slanted side, scaled by cos(pi/k)
    slack = along * math.sin(math.pi / tri.k) - across * math.cos(math.pi / tri.k)
    if closed:
        return along <= tri.depth + EPS_GEOM and slack >= -EPS_GEOM
    return EPS_GEOM < along < tri.depth - EPS_GEOM and slack > EPS_GEOM


class Side(IntEnum):
    NEGATIVE = -1
    ON = 0
    POSITIVE = 1


# Inward normal of the positive side for each line direction (mod 180 deg),
# for the even half-graph.  The odd half-graph uses the opposite normals.
_POSITIVE_NORMAL_DEG = {0: 270.0, 1: 150.0, 2: 30.0}


@dataclass(frozen=True)
class OrientedConeLine:
    """Line through ``anchor`` parallel to a cone boundary.

    ``direction`` is an index in ``0..5``; the line runs at ``60 * direction``
    degrees.  The positive side is the one that bounds the cones of
    ``parity`` (0 = even): below a horizontal line, above lines of slope
    +-sqrt(3).
    """

    anchor: Point
    direction: int
    parity: int = 0

    @property
    def unit(self) -> tuple[float, float]:
        a = math.radians(60.0 * self.direction)
        return math.cos(a), math.sin(a)

    @property
    def normal(self) -> tuple[float, float]:
        a = math.radians(_POSITIVE_NORMAL_DEG[self.direction % 3] + 180.0 * (self.parity % 2))
        return math.cos(a), math.sin(a)

    def offset(self, w) -> float:
        nx, ny = self.normal
        return (w[0] - self.anchor.x) * nx + (w[1] - self.anchor.y) * ny

    def along(self, w) -> float:
        ux, uy = self.unit
        return (w[0] - self.anchor.x) * ux + (w[1] - self.anchor.y) * uy

    @property
    def third_cone(self) -> int:
        """Cone of the parity whose bisector is perpendicular to the line.

        Side routing along the line never uses edges defined by this cone.
        """
        for c in range(self.parity % 2, 6, 2):
            b = bisector_angle(c)
            ux, uy = self.unit
            if abs(math.cos(b) * ux + math.sin(b) * uy) < 1e-9:
                return c
        raise AssertionError("unreachable")


def side_of_line(line: OrientedConeLine, w) -> Side:
    s = line.offset(w)
    if abs(s) <= EPS_GEOM:
        return Side.ON
    return Side.POSITIVE if s > 0 else Side.NEGATIVE


def triangle_sides(tri: CanonicalTriangle) -> list[OrientedConeLine]:
    """The three boundary lines of a ``k=6`` canonical triangle."""
    if tri.k != 6:
        raise ContractViolation("triangle_sides needs k=6")
    apex, _, left = tri.corners
    # bounding rays at 60 (i + 1) and 60 (i + 2) degrees, far side at 60 i
    return [
        OrientedConeLine(apex, (tri.cone + 1) % 6),
        OrientedConeLine(apex, (tri.cone + 2) % 6),
        OrientedConeLine(left, tri.cone % 6),
    ]


def clockwise_angle(frm, to) -> float:
    """Clockwise rotation in ``[0, 2 pi)`` taking direction ``frm`` onto ``to``."""
    if (frm[0] == 0 and frm[1] == 0) or (to[0] == 0 and to[1] == 0):
        raise DegenerateInputError("zero direction vector")
    return normalize_angle(math.atan2(frm[1], frm[0]) - math.atan2(to[1], to[0]))


def distance(p, q) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])
