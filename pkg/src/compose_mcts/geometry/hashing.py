"""Translation-invariant hashing of multi-piece configurations."""

import hashlib
from typing import Mapping, Sequence

from ..lib.exceptions import GeometryError
from .shapes import ConvexPolygon, RigidTransform, Vec2, anchor_points, apply_transform, lex_less


def canonical_config_hash(
    pieces: Sequence[tuple[int, RigidTransform]],
    shapes: Mapping[int, ConvexPolygon],
) -> int:
    """64-bit hash of a configuration up to a common translation.

    The configuration is shifted so that the lexicographically smallest anchor
    of any placed piece sits at the origin. The hash covers the sorted
    ``(piece_id, rot, flip, shifted t)`` records, so two poses of a symmetric
    piece that cover the same region still hash apart.

    Args:
        pieces: ``(piece_id, pose)`` for every placed piece
        shapes: canonical polygon per piece id
    """
    if not pieces:
        raise GeometryError("cannot hash an empty configuration")

    lowest: Vec2 | None = None
    for piece_id, pose in pieces:
        for anchor in anchor_points(shapes[piece_id]):
            world = apply_transform(pose, anchor)
            if lowest is None or lex_less(world, lowest):
                lowest = world
    assert lowest is not None

    records = sorted((piece_id, pose.rot, int(pose.flip), (pose.t - lowest).key()) for piece_id, pose in pieces)
    digest = hashlib.blake2b(repr(records).encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "big")
