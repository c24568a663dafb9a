"""The seven tangram pieces.

Coordinates are scaled so every canonical vertex is an integer: small
triangles have legs of 2, which gives the standard area ratios
small:medium:square:parallelogram:large = 2:4:4:4:8 (total 32).
"""

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..geometry import ConvexPolygon, RigidTransform, Vec2, anchor_points, apply_transform, transform_polygon

NUM_PIECES = 7
CANVAS_HALF = 8.0


@dataclass(frozen=True)
class PieceKind:
    id: int
    name: str
    canonical: ConvexPolygon
    flip_states: int

    @property
    def anchor_count(self) -> int:
        return 2 * len(self.canonical)


def _piece(pid: int, name: str, points: list[tuple[int, int]], flip_states: int = 1) -> PieceKind:
    return PieceKind(pid, name, ConvexPolygon.from_ints(points), flip_states)


PIECES: tuple[PieceKind, ...] = (
    _piece(0, "small_triangle_a", [(0, 0), (2, 0), (0, 2)]),
    _piece(1, "small_triangle_b", [(0, 0), (2, 0), (0, 2)]),
    _piece(2, "medium_triangle", [(0, 0), (2, 2), (-2, 2)]),
    _piece(3, "large_triangle_a", [(0, 0), (4, 0), (0, 4)]),
    _piece(4, "large_triangle_b", [(0, 0), (4, 0), (0, 4)]),
    _piece(5, "square", [(0, 0), (2, 0), (2, 2), (0, 2)]),
    # The only chiral piece, hence the only one with two flip states.
    _piece(6, "parallelogram", [(0, 0), (2, 0), (4, 2), (2, 2)], flip_states=2),
)

SHAPES = {p.id: p.canonical for p in PIECES}


def piece_defs_hash() -> str:
    """Digest of the piece definitions, stored with persisted action tables."""
    payload = [
        [p.id, p.flip_states, [[list(v.x.key()), list(v.y.key())] for v in p.canonical.vertices]]
        for p in PIECES
    ]
    return hashlib.sha256(json.dumps(payload).encode("utf-8")).hexdigest()[:16]


@lru_cache(maxsize=None)
def rotation_matrix(rot: int, flip: bool) -> np.ndarray:
    """Float linear part of a pose: rotation after optional y-axis mirror."""
    angle = rot * np.pi / 4.0
    c, s = np.cos(angle), np.sin(angle)
    rotation = np.array([[c, -s], [s, c]])
    if flip:
        rotation = rotation @ np.array([[-1.0, 0.0], [0.0, 1.0]])
    return rotation


def pose_vertices(piece_id: int, pose: RigidTransform) -> np.ndarray:
    """Float CCW vertices of a placed piece."""
    return transform_polygon(pose, SHAPES[piece_id]).to_array()


def pose_anchors(piece_id: int, pose: RigidTransform) -> list[Vec2]:
    """Exact world anchors, indexed like the canonical anchors."""
    return [apply_transform(pose, a) for a in anchor_points(SHAPES[piece_id])]
