"""Precomputed discretized tangram action space.

Each entry aligns one anchor of a *moved* piece with one anchor of an already
placed *reference* piece. Entries are expressed in the reference's frame, so
the two-piece overlap check done here holds wherever the reference ends up.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import (
    ConvexPolygon,
    RigidTransform,
    anchor_points,
    polygons_overlap,
    transform_polygon,
)
from ..lib.exceptions import ChecksumError, DataError
from .tangram_pieces import NUM_PIECES, PIECES, SHAPES, piece_defs_hash

logger = logging.getLogger(__name__)

TABLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TangramAction:
    moved: int
    reference: int
    moved_anchor: int
    ref_anchor: int
    rot: int
    flip: int
    # Reference flip state the entry was generated for.
    ref_flip: int = 0


def reference_frame(ref_flip: int) -> RigidTransform:
    """Canonical pose of the reference piece during precomputation."""
    return RigidTransform(rot=0, flip=bool(ref_flip))


def relative_pose(action: TangramAction) -> RigidTransform:
    """Pose of the moved piece when the reference sits in its canonical frame."""
    ref_anchor = anchor_points(SHAPES[action.reference])[action.ref_anchor]
    ref_world = reference_frame(action.ref_flip).linear(ref_anchor)
    linear = RigidTransform(rot=action.rot, flip=bool(action.flip))
    moved_anchor = linear.linear(anchor_points(SHAPES[action.moved])[action.moved_anchor])
    return RigidTransform(rot=action.rot, flip=bool(action.flip), t=ref_world - moved_anchor)


@dataclass
class ActionTable:
    """Deduplicated action list plus vectorized views used by the masks."""

    actions: list[TangramAction]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.poses = [relative_pose(a) for a in self.actions]
        n = len(self.actions)
        self.moved = np.array([a.moved for a in self.actions], dtype=np.int64)
        self.reference = np.array([a.reference for a in self.actions], dtype=np.int64)
        self.ref_flip = np.array([a.ref_flip for a in self.actions], dtype=np.int64)
        self.rot = np.array([a.rot for a in self.actions], dtype=np.int64)
        self.flip = np.array([a.flip for a in self.actions], dtype=np.int64)
        # Moved-piece vertices in the reference frame; triangles repeat vertex 0.
        verts = np.zeros((n, 4, 2), dtype=np.float64)
        for i, (action, pose) in enumerate(zip(self.actions, self.poses)):
            poly = transform_polygon(pose, SHAPES[action.moved]).to_array()
            verts[i, : len(poly)] = poly
            verts[i, len(poly):] = poly[0]
        self.rel_vertices = verts
        self.metadata.setdefault("count", n)
        self.metadata.setdefault("piece_defs_hash", piece_defs_hash())

    @property
    def size(self) -> int:
        return len(self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    def entries_json(self) -> list[dict]:
        return [asdict(a) for a in self.actions]

    def digest(self) -> str:
        payload = json.dumps(self.entries_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def footprint(polygon: ConvexPolygon) -> tuple:
    """Order-free key of the region a placed polygon covers."""
    return tuple(sorted(v.key() for v in polygon.vertices))


def precompute_action_table() -> ActionTable:
    """Enumerate, overlap-filter and deduplicate all two-piece placements.

    Loop order (moved, reference, reference flip, moved flip, rotation,
    reference anchor, moved anchor) fixes the output order. Duplicates are
    dropped per ordered (moved, reference, reference flip) triple: entries that
    put the moved piece on the same region of the reference frame are one
    action, whichever symmetric pose produced them.
    """
    actions: list[TangramAction] = []
    seen: set[tuple] = set()
    candidates = 0
    for moved in PIECES:
        for ref in PIECES:
            if moved.id == ref.id:
                continue
            for ref_flip in range(ref.flip_states):
                ref_pose = reference_frame(ref_flip)
                ref_poly = transform_polygon(ref_pose, ref.canonical)
                for flip in range(moved.flip_states):
                    for rot in range(8):
                        for ref_anchor in range(ref.anchor_count):
                            for moved_anchor in range(moved.anchor_count):
                                candidates += 1
                                action = TangramAction(
                                    moved=moved.id,
                                    reference=ref.id,
                                    moved_anchor=moved_anchor,
                                    ref_anchor=ref_anchor,
                                    rot=rot,
                                    flip=flip,
                                    ref_flip=ref_flip,
                                )
                                placed = transform_polygon(relative_pose(action), moved.canonical)
                                if polygons_overlap(placed, ref_poly):
                                    continue
                                key = (moved.id, ref.id, ref_flip, footprint(placed))
                                if key in seen:
                                    continue
                                seen.add(key)
                                actions.append(action)
    logger.info(f"Action table: {len(actions)} unique actions from {candidates} candidates")
    return ActionTable(actions, {"candidates": candidates})


def save_action_table(table: ActionTable, path: str | Path) -> Path:
    """Persist as JSON: entries plus ``{piece_defs_hash, count, sha256}``."""
    path = Path(path)
    document = {
        "version": TABLE_FORMAT_VERSION,
        "metadata": {
            "piece_defs_hash": piece_defs_hash(),
            "count": table.size,
            "sha256": table.digest(),
        },
        "actions": table.entries_json(),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(document, separators=(",", ":")), encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write action table {path}: {e}") from e
    return path


def load_action_table(path: str | Path) -> ActionTable:
    """Load and verify a persisted table; stale or corrupted files raise ``ChecksumError``."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"Cannot read action table {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ChecksumError(f"Action table {path} is not valid JSON: {e}") from e

    try:
        meta = document["metadata"]
        actions = [TangramAction(**entry) for entry in document["actions"]]
    except (KeyError, TypeError) as e:
        raise ChecksumError(f"Action table {path} is malformed: {e}") from e

    if meta.get("piece_defs_hash") != piece_defs_hash():
        raise ChecksumError(f"Action table {path} was built for different piece definitions")
    if meta.get("count") != len(actions):
        raise ChecksumError(f"Action table {path} count mismatch: {meta.get('count')} != {len(actions)}")
    for a in actions:
        if not (0 <= a.moved < NUM_PIECES and 0 <= a.reference < NUM_PIECES and a.moved != a.reference):
            raise ChecksumError(f"Action table {path} has invalid piece ids: {a}")
        if not (0 <= a.moved_anchor < PIECES[a.moved].anchor_count
                and 0 <= a.ref_anchor < PIECES[a.reference].anchor_count):
            raise ChecksumError(f"Action table {path} has invalid anchors: {a}")
        if not (0 <= a.rot < 8 and 0 <= a.flip < PIECES[a.moved].flip_states
                and 0 <= a.ref_flip < PIECES[a.reference].flip_states):
            raise ChecksumError(f"Action table {path} has invalid rotation/flip: {a}")

    table = ActionTable(actions, dict(meta))
    if table.digest() != meta.get("sha256"):
        raise ChecksumError(f"Action table {path} checksum mismatch")
    return table
