"""Exact 2D geometry for convex pieces under 45-degree rotations."""

from .hashing import canonical_config_hash
from .scalar import ONE, ZERO, Scalar, scalar_sign
from .shapes import (
    IDENTITY,
    ORIGIN,
    ConvexPolygon,
    RigidTransform,
    Vec2,
    anchor_points,
    apply_transform,
    point_in_polygons,
    polygon_area2,
    polygon_in_rect,
    polygons_overlap,
    polygons_touch,
    transform_polygon,
)

__all__ = [
    "Scalar", "ZERO", "ONE", "scalar_sign",
    "Vec2", "ORIGIN", "ConvexPolygon", "RigidTransform", "IDENTITY",
    "apply_transform", "transform_polygon", "polygons_overlap", "polygons_touch",
    "polygon_in_rect", "anchor_points", "polygon_area2", "point_in_polygons",
    "canonical_config_hash",
]
