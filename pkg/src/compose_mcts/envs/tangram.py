"""Tangram assembly environment.

States are immutable; transitions place one piece next to an already placed
reference piece by anchor alignment. The hard constraint (no overlap, every
piece connected) is enforced through the action masks: ``Partial`` applies the
static checks only, ``Full`` additionally rejects placements that would
overlap any placed piece.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Any, Optional

import numpy as np

from ..geometry import (
    IDENTITY,
    ConvexPolygon,
    RigidTransform,
    Scalar,
    Vec2,
    canonical_config_hash,
    polygons_overlap,
    polygons_touch,
    transform_polygon,
)
from ..lib.exceptions import DatasetError, EmptyStateError, InvalidActionError
from .action_table import ActionTable
from .base import StepOutcome
from .raster import center_on_centroid, downsample, iou, render_polygons, rle_decode, rle_encode
from .tangram_pieces import NUM_PIECES, SHAPES, rotation_matrix

logger = logging.getLogger(__name__)

MAX_STEPS = 12
OVERLAP_PENALTY = -1.0
GOAL_RESOLUTION = 64
FEATURE_GRID = 32
# Positive-area overlaps between ring coordinates of this size are orders of
# magnitude deeper than this, so the float mask only has to resolve touching.
SAT_TOLERANCE = 1e-7


class MaskMode(str, Enum):
    FULL = "full"
    PARTIAL = "partial"


@dataclass(frozen=True)
class TangramGoal:
    """Target silhouette plus the configuration it was rendered from."""

    target_mask: np.ndarray = field(compare=False)
    source_id: str = ""
    source_poses: Optional[tuple[Optional[RigidTransform], ...]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not np.asarray(self.target_mask).any():
            raise DatasetError(f"goal {self.source_id!r} has an empty mask")


@dataclass(frozen=True)
class TangramState:
    poses: tuple[Optional[RigidTransform], ...]
    step_count: int = 0
    failed: bool = False
    goal: Optional[TangramGoal] = field(default=None, compare=False)

    @property
    def placed(self) -> list[int]:
        return [i for i, pose in enumerate(self.poses) if pose is not None]

    @property
    def num_placed(self) -> int:
        return sum(pose is not None for pose in self.poses)

    @property
    def done(self) -> bool:
        return self.failed or self.num_placed == NUM_PIECES or self.step_count >= MAX_STEPS

    @cached_property
    def exact_polygons(self) -> dict[int, ConvexPolygon]:
        return {i: transform_polygon(self.poses[i], SHAPES[i]) for i in self.placed}

    @cached_property
    def float_polygons(self) -> dict[int, np.ndarray]:
        return {i: poly.to_array() for i, poly in self.exact_polygons.items()}


def empty_poses() -> tuple[Optional[RigidTransform], ...]:
    return (None,) * NUM_PIECES


def initial_state(
    rng: np.random.Generator,
    goal: Optional[TangramGoal] = None,
    first_piece: Optional[int] = None,
) -> TangramState:
    """First piece at the origin with identity pose, chosen uniformly unless given.

    ``first_piece`` seeds from a one-piece prefix of a dataset configuration.
    """
    piece = int(rng.integers(NUM_PIECES)) if first_piece is None else int(first_piece)
    poses = list(empty_poses())
    poses[piece] = IDENTITY
    return TangramState(tuple(poses), goal=goal)


def _reference_placement(state: TangramState, table: ActionTable, index: int) -> RigidTransform:
    ref_pose = state.poses[table.actions[index].reference]
    assert ref_pose is not None
    return RigidTransform(rot=ref_pose.rot, flip=False, t=ref_pose.t).compose(table.poses[index])


def static_mask(state: TangramState, table: ActionTable) -> np.ndarray:
    """Partial checks: moved unplaced, reference placed with the entry's flip state."""
    if state.done:
        return np.zeros(table.size, dtype=bool)
    placed = np.array([pose is not None for pose in state.poses])
    flips = np.array([int(pose.flip) if pose is not None else -1 for pose in state.poses])
    return (
        ~placed[table.moved]
        & placed[table.reference]
        & (flips[table.reference] == table.ref_flip)
    )


def _world_vertices(state: TangramState, table: ActionTable, idx: np.ndarray) -> np.ndarray:
    rots = np.zeros((NUM_PIECES, 2, 2))
    shifts = np.zeros((NUM_PIECES, 2))
    for i in state.placed:
        pose = state.poses[i]
        rots[i] = rotation_matrix(pose.rot, False)
        shifts[i] = pose.t.to_float()
    refs = table.reference[idx]
    return np.einsum("njk,nvk->nvj", rots[refs], table.rel_vertices[idx]) + shifts[refs][:, None, :]


def _unit_normals(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    normals = np.stack([edges[..., 1], -edges[..., 0]], axis=-1)
    norms = np.linalg.norm(normals, axis=-1, keepdims=True)
    valid = norms[..., 0] > 1e-12
    return normals / np.where(norms > 1e-12, norms, 1.0), valid


def sat_overlap_many(world: np.ndarray, poly: np.ndarray, tol: float = SAT_TOLERANCE) -> np.ndarray:
    """Float separating-axis test of many candidate polygons against one polygon.

    Args:
        world: (n, 4, 2) candidate vertices; triangles repeat a vertex
        poly: (m, 2) CCW vertices of a placed piece

    Returns:
        (n,) True where the interiors overlap by more than ``tol``
    """
    axes_w, valid_w = _unit_normals(np.roll(world, -1, axis=1) - world)
    proj_w = np.einsum("nak,nvk->nav", axes_w, world)
    proj_p = np.einsum("nak,mk->nam", axes_w, poly)
    amount_w = np.minimum(proj_w.max(-1), proj_p.max(-1)) - np.maximum(proj_w.min(-1), proj_p.min(-1))
    amount_w = np.where(valid_w, amount_w, np.inf)

    axes_p, _ = _unit_normals(np.roll(poly, -1, axis=0) - poly)
    proj_w2 = np.einsum("ak,nvk->nav", axes_p, world)
    proj_p2 = (poly @ axes_p.T).T
    amount_p = (
        np.minimum(proj_w2.max(-1), proj_p2.max(-1)[None])
        - np.maximum(proj_w2.min(-1), proj_p2.min(-1)[None])
    )
    return np.minimum(amount_w.min(-1), amount_p.min(-1)) > tol


def legal_mask(state: TangramState, table: ActionTable, mode: MaskMode = MaskMode.FULL) -> np.ndarray:
    """Boolean vector over the table; an all-false result is a dead end."""
    mask = static_mask(state, table)
    if MaskMode(mode) is MaskMode.PARTIAL or not mask.any():
        return mask
    idx = np.flatnonzero(mask)
    world = _world_vertices(state, table, idx)
    blocked = np.zeros(idx.size, dtype=bool)
    for poly in state.float_polygons.values():
        blocked |= sat_overlap_many(world, poly)
    mask[idx[blocked]] = False
    return mask


def step(
    state: TangramState,
    action: int,
    table: ActionTable,
    mode: MaskMode = MaskMode.FULL,
) -> StepOutcome[TangramState]:
    """Apply one placement.

    The overlap test here is exact. In ``Partial`` mode an overlapping
    placement ends the episode with the overlap penalty and the piece is not
    placed; in ``Full`` mode it is rejected like any other masked action.
    Terminal goal rewards are added by the caller's scorer.
    """
    if not 0 <= action < table.size:
        raise InvalidActionError(f"action {action} outside table of size {table.size}")
    if state.done:
        raise InvalidActionError("episode already finished")
    entry = table.actions[action]
    ref_pose = state.poses[entry.reference]
    if (
        state.poses[entry.moved] is not None
        or ref_pose is None
        or int(ref_pose.flip) != entry.ref_flip
    ):
        raise InvalidActionError(f"action {action} fails the static checks")

    pose = _reference_placement(state, table, action)
    polygon = transform_polygon(pose, SHAPES[entry.moved])
    if any(polygons_overlap(polygon, other) for other in state.exact_polygons.values()):
        if MaskMode(mode) is MaskMode.FULL:
            raise InvalidActionError(f"action {action} overlaps a placed piece")
        failed = replace(state, step_count=state.step_count + 1, failed=True)
        return StepOutcome(failed, OVERLAP_PENALTY, True)

    poses = list(state.poses)
    poses[entry.moved] = pose
    successor = replace(state, poses=tuple(poses), step_count=state.step_count + 1)
    return StepOutcome(successor, 0.0, successor.done)


def is_complete(state: TangramState) -> bool:
    return not state.failed and state.num_placed == NUM_PIECES


def is_valid(state: TangramState) -> bool:
    """Exact pairwise overlap check over all placed pieces."""
    polys = list(state.exact_polygons.values())
    return not any(
        polygons_overlap(polys[i], polys[j]) for i in range(len(polys)) for j in range(i + 1, len(polys))
    )


def is_connected(state: TangramState) -> bool:
    """Placed pieces form one component under the touching relation."""
    placed = state.placed
    if not placed:
        return False
    polys = state.exact_polygons
    reached = {placed[0]}
    frontier = [placed[0]]
    while frontier:
        current = frontier.pop()
        for other in placed:
            if other not in reached and polygons_touch(polys[current], polys[other]):
                reached.add(other)
                frontier.append(other)
    return len(reached) == len(placed)


def render_silhouette(state: TangramState, resolution: int = GOAL_RESOLUTION) -> np.ndarray:
    """Union of placed pieces rasterized over the fixed canvas."""
    if not state.placed:
        raise EmptyStateError("cannot render a state with no placed pieces")
    return render_polygons(list(state.float_polygons.values()), resolution)


def centered(state: TangramState) -> TangramState:
    """Same configuration shifted by a whole-unit vector so its bounding box is centered."""
    if not state.placed:
        raise EmptyStateError("cannot center an empty state")
    verts = np.concatenate(list(state.float_polygons.values()))
    center = (verts.min(axis=0) + verts.max(axis=0)) / 2.0
    shift = Vec2(Scalar.from_int(-int(round(center[0]))), Scalar.from_int(-int(round(center[1]))))
    poses = tuple(pose.translated(shift) if pose is not None else None for pose in state.poses)
    return replace(state, poses=poses)


def iou_goal_score(state: TangramState, goal: TangramGoal) -> float:
    """IoU of the rendered state and the goal mask after centering both on their centroids."""
    if not is_complete(state):
        raise EmptyStateError("goal score needs a terminal-valid state")
    resolution = goal.target_mask.shape[0]
    raster = render_silhouette(centered(state), resolution)
    return iou(center_on_centroid(raster), center_on_centroid(goal.target_mask))


def goal_from_state(state: TangramState, source_id: str, resolution: int = GOAL_RESOLUTION) -> TangramGoal:
    mask = render_silhouette(centered(state), resolution)
    return TangramGoal(target_mask=mask, source_id=source_id, source_poses=state.poses)


def random_assembly(
    table: ActionTable,
    rng: np.random.Generator,
    max_extent: float = 12.0,
    max_restarts: int = 200,
) -> TangramState:
    """Full-mode random rollout to all seven pieces.

    Placements are drawn uniformly among legal actions that keep the bounding
    box within ``max_extent`` so the silhouette fits the canvas; dead ends
    restart the rollout.
    """
    for _ in range(max_restarts):
        state = initial_state(rng)
        while not state.done:
            mask = legal_mask(state, table, MaskMode.FULL)
            idx = np.flatnonzero(mask)
            if idx.size == 0:
                break
            world = _world_vertices(state, table, idx)
            placed = np.concatenate(list(state.float_polygons.values()))
            lo = np.minimum(world.min(axis=1), placed.min(axis=0))
            hi = np.maximum(world.max(axis=1), placed.max(axis=0))
            compact = idx[((hi - lo) <= max_extent).all(axis=1)]
            if compact.size == 0:
                break
            state = step(state, int(rng.choice(compact)), table, MaskMode.FULL).state
        if is_complete(state):
            return state
    raise DatasetError(f"no complete assembly within {max_restarts} restarts")


def gen_tangram_goals(
    table: ActionTable,
    n: int,
    seed: int,
    prefix: str = "goal",
    resolution: int = GOAL_RESOLUTION,
    max_attempts_factor: int = 20,
) -> list[TangramGoal]:
    """Render ``n`` goals from distinct random assemblies.

    Assemblies equal up to translation count once; the draw gives up after
    ``max_attempts_factor * n`` assemblies.
    """
    rng = np.random.default_rng(seed)
    goals: list[TangramGoal] = []
    seen: set[int] = set()
    attempts = 0
    while len(goals) < n:
        if attempts >= max_attempts_factor * n:
            raise DatasetError(f"only {len(goals)} distinct assemblies after {attempts} attempts")
        attempts += 1
        state = random_assembly(table, rng)
        key = canonical_config_hash([(i, state.poses[i]) for i in state.placed], SHAPES)
        if key in seen:
            continue
        seen.add(key)
        goals.append(goal_from_state(state, f"{prefix}-{len(goals):05d}", resolution))
    logger.info(f"Generated {n} tangram goals ({prefix}) from {attempts} assemblies")
    return goals


def pose_to_json(pose: Optional[RigidTransform]) -> Optional[list]:
    if pose is None:
        return None
    return [pose.rot, int(pose.flip), list(pose.t.x.key()), list(pose.t.y.key())]


def pose_from_json(data: Optional[list]) -> Optional[RigidTransform]:
    if data is None:
        return None
    rot, flip, tx, ty = data
    return RigidTransform(rot=int(rot), flip=bool(flip), t=Vec2(Scalar(*tx), Scalar(*ty)))


def goal_to_json(goal: TangramGoal) -> dict[str, Any]:
    return {
        "source_id": goal.source_id,
        "mask": rle_encode(goal.target_mask),
        "poses": None if goal.source_poses is None else [pose_to_json(p) for p in goal.source_poses],
    }


def goal_from_json(data: dict[str, Any]) -> TangramGoal:
    poses = data.get("poses")
    return TangramGoal(
        target_mask=rle_decode(data["mask"]),
        source_id=data.get("source_id", ""),
        source_poses=None if poses is None else tuple(pose_from_json(p) for p in poses),
    )


def source_state(goal: TangramGoal) -> TangramState:
    """The configuration a goal was rendered from, as a terminal state."""
    if goal.source_poses is None:
        raise DatasetError(f"goal {goal.source_id!r} carries no source configuration")
    return TangramState(goal.source_poses, step_count=NUM_PIECES - 1, goal=goal)


def prefix_piece(goal: TangramGoal) -> Optional[int]:
    """Piece sitting at the origin with identity pose in the goal's source, if any."""
    if goal.source_poses is None:
        return None
    for i, pose in enumerate(goal.source_poses):
        if pose is not None and pose.rot == 0 and not pose.flip and pose.t.x.is_zero() and pose.t.y.is_zero():
            return i
    return None


class TangramEnv:
    """``CompositionEnv`` adapter for tangram assembly."""

    name = "tangram"

    def __init__(self, table: ActionTable, mode: MaskMode = MaskMode.FULL):
        self.table = table
        self.mode = MaskMode(mode)
        self.num_actions = table.size
        grid = FEATURE_GRID * FEATURE_GRID
        self.feature_dim = grid + NUM_PIECES + NUM_PIECES * 4 + grid
        self.reward_state_dim = grid
        self.goal_dim = grid

    def initial_state(self, goal: TangramGoal, rng: np.random.Generator, use_prefix: bool = False) -> TangramState:
        first = prefix_piece(goal) if use_prefix else None
        return initial_state(rng, goal=goal, first_piece=first)

    def legal_mask(self, state: TangramState) -> np.ndarray:
        return legal_mask(state, self.table, self.mode)

    def step(self, state: TangramState, action: int) -> StepOutcome[TangramState]:
        return step(state, action, self.table, self.mode)

    def is_complete(self, state: TangramState) -> bool:
        return is_complete(state)

    def is_valid(self, state: TangramState) -> bool:
        return not state.failed and is_valid(state)

    def oracle_score(self, state: TangramState) -> float:
        if state.goal is None:
            raise EmptyStateError("state carries no goal")
        return iou_goal_score(state, state.goal)

    def _goal_grid(self, state: TangramState) -> np.ndarray:
        if state.goal is None:
            return np.zeros(FEATURE_GRID * FEATURE_GRID)
        return downsample(state.goal.target_mask, FEATURE_GRID).ravel()

    def features(self, state: TangramState) -> np.ndarray:
        silhouette = downsample(render_silhouette(state, GOAL_RESOLUTION), FEATURE_GRID).ravel()
        flags = np.array([pose is not None for pose in state.poses], dtype=np.float64)
        poses = np.zeros((NUM_PIECES, 4))
        for i in state.placed:
            pose = state.poses[i]
            x, y = pose.t.to_float()
            poses[i] = [pose.rot / 4.0 - 1.0, float(pose.flip), x / 8.0, y / 8.0]
        return np.concatenate([silhouette, flags, np.clip(poses, -1.0, 1.0).ravel(), self._goal_grid(state)])

    def reward_features(self, state: TangramState) -> tuple[np.ndarray, np.ndarray]:
        silhouette = render_silhouette(centered(state), GOAL_RESOLUTION)
        return downsample(silhouette, FEATURE_GRID).ravel(), self._goal_grid(state)

    def digest(self, state: TangramState) -> str:
        key = repr([None if p is None else p.key() for p in state.poses]) + f"|{state.failed}"
        return hashlib.sha1(key.encode("ascii")).hexdigest()[:16]

    def describe(self, state: TangramState) -> dict[str, Any]:
        return {
            "poses": [pose_to_json(p) for p in state.poses],
            "failed": state.failed,
            "goal": state.goal.source_id if state.goal is not None else None,
        }
