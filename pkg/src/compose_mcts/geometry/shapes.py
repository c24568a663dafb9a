"""Exact vectors, convex polygons and rigid transforms under the 8-fold rotation group."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..lib.exceptions import GeometryError
from .scalar import ZERO, Scalar, scalar_sign


@dataclass(frozen=True, slots=True)
class Vec2:
    x: Scalar
    y: Scalar

    @classmethod
    def of(cls, x: int | Scalar, y: int | Scalar) -> Vec2:
        return cls(_as_scalar(x), _as_scalar(y))

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> Scalar:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2) -> Scalar:
        return self.x * other.y - self.y * other.x

    def midpoint(self, other: Vec2) -> Vec2:
        return Vec2((self.x + other.x).half(), (self.y + other.y).half())

    def key(self) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
        return (self.x.key(), self.y.key())

    def to_float(self) -> tuple[float, float]:
        return (float(self.x), float(self.y))


ORIGIN = Vec2(ZERO, ZERO)


def _as_scalar(value: int | Scalar) -> Scalar:
    return value if isinstance(value, Scalar) else Scalar.from_int(value)


def lex_less(a: Vec2, b: Vec2) -> bool:
    """Exact lexicographic (x, then y) order."""
    dx = scalar_sign(a.x - b.x)
    if dx != 0:
        return dx < 0
    return scalar_sign(a.y - b.y) < 0


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices."""

    vertices: tuple[Vec2, ...]

    def __post_init__(self) -> None:
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        if n < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if len({v.key() for v in verts}) != n:
            raise GeometryError("polygon has repeated vertices")
        for i in range(n):
            a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
            if scalar_sign((b - a).cross(c - b)) <= 0:
                raise GeometryError("polygon must be strictly convex and counter-clockwise")

    @classmethod
    def from_ints(cls, points: Iterable[tuple[int, int]]) -> ConvexPolygon:
        return cls(tuple(Vec2.of(x, y) for x, y in points))

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self) -> list[tuple[Vec2, Vec2]]:
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def to_array(self) -> np.ndarray:
        return np.array([v.to_float() for v in self.vertices], dtype=np.float64)


@dataclass(frozen=True, slots=True)
class RigidTransform:
    """``v -> R(rot * 45deg) . F(v) + t`` where F mirrors about the y-axis when ``flip``."""

    rot: int = 0
    flip: bool = False
    t: Vec2 = ORIGIN

    def __post_init__(self) -> None:
        if not 0 <= self.rot < 8:
            raise GeometryError(f"rotation index {self.rot} outside [0, 8)")

    def linear(self, v: Vec2) -> Vec2:
        """Apply rotation and reflection only."""
        x, y = v.x, v.y
        if self.flip:
            x = -x
        for _ in range(self.rot // 2):
            x, y = -y, x
        if self.rot % 2:
            x, y = (x - y).mul_half_sqrt2(), (x + y).mul_half_sqrt2()
        return Vec2(x, y)

    def compose(self, inner: RigidTransform) -> RigidTransform:
        """Transform equal to applying ``inner`` first, then ``self``."""
        inner_rot = (-inner.rot) % 8 if self.flip else inner.rot
        return RigidTransform(
            rot=(self.rot + inner_rot) % 8,
            flip=self.flip != inner.flip,
            t=apply_transform(self, inner.t),
        )

    def inverse(self) -> RigidTransform:
        rot = self.rot if self.flip else (-self.rot) % 8
        linear_only = RigidTransform(rot=rot, flip=self.flip)
        return RigidTransform(rot=rot, flip=self.flip, t=-linear_only.linear(self.t))

    def translated(self, d: Vec2) -> RigidTransform:
        return RigidTransform(self.rot, self.flip, self.t + d)

    def key(self) -> tuple:
        return (self.rot, int(self.flip), self.t.key())


IDENTITY = RigidTransform()


def apply_transform(T: RigidTransform, v: Vec2) -> Vec2:
    return T.linear(v) + T.t


def transform_polygon(T: RigidTransform, poly: ConvexPolygon) -> ConvexPolygon:
    """Image of ``poly``; a reflection reverses orientation so the order is restored."""
    verts = [apply_transform(T, v) for v in poly.vertices]
    if T.flip:
        verts.reverse()
    return ConvexPolygon(tuple(verts))


def _overlap_amounts(a: ConvexPolygon, b: ConvexPolygon) -> list[Scalar]:
    """Projection-interval overlap on every edge normal of both polygons."""
    amounts = []
    for poly in (a, b):
        for p0, p1 in poly.edges():
            axis = Vec2(p1.y - p0.y, p0.x - p1.x)
            pa = [axis.dot(v) for v in a.vertices]
            pb = [axis.dot(v) for v in b.vertices]
            hi = min(max(pa), max(pb))
            lo = max(min(pa), min(pb))
            amounts.append(hi - lo)
    return amounts


def polygons_overlap(a: ConvexPolygon, b: ConvexPolygon) -> bool:
    """True iff the interiors intersect with positive area; touching is not overlap."""
    return all(scalar_sign(amount) > 0 for amount in _overlap_amounts(a, b))


def polygons_touch(a: ConvexPolygon, b: ConvexPolygon) -> bool:
    """Boundaries meet in at least one point while the interiors stay disjoint."""
    signs = [scalar_sign(amount) for amount in _overlap_amounts(a, b)]
    return min(signs) == 0


def polygon_in_rect(poly: ConvexPolygon, xmin: Scalar, xmax: Scalar, ymin: Scalar, ymax: Scalar) -> bool:
    if not (xmin < xmax and ymin < ymax):
        raise GeometryError("empty rectangle")
    return all(xmin <= v.x <= xmax and ymin <= v.y <= ymax for v in poly.vertices)


def anchor_points(poly: ConvexPolygon) -> list[Vec2]:
    """Vertices in order, then edge midpoints in edge order."""
    return list(poly.vertices) + [p0.midpoint(p1) for p0, p1 in poly.edges()]


def polygon_area2(poly: ConvexPolygon) -> Scalar:
    """Twice the signed area (shoelace), exact."""
    total = ZERO
    for p0, p1 in poly.edges():
        total = total + p0.cross(p1)
    return total


def point_in_polygons(polys: Sequence[np.ndarray], xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized float test: which points lie inside (or on) any CCW polygon."""
    inside_any = np.zeros(xs.shape, dtype=bool)
    for verts in polys:
        inside = np.ones(xs.shape, dtype=bool)
        nxt = np.roll(verts, -1, axis=0)
        for (x0, y0), (x1, y1) in zip(verts, nxt):
            inside &= (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0) >= -1e-12
        inside_any |= inside
    return inside_any
