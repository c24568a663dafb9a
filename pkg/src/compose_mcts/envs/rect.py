"""Rectangle composition on a 16x16 integer canvas centered at the origin.

Only the hard constraint (no shared cells, footprint inside the canvas) is
masked. Containment in the goal region is what the reward judges, so
placements outside the region stay expressible.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Optional

import numpy as np

from ..lib.exceptions import DatasetError, InvalidActionError
from .base import StepOutcome

CANVAS = 16
COORD_MIN = -CANVAS // 2
NUM_RECT_ACTIONS = 3 * 2 * CANVAS * CANVAS
MIN_SIDE, MAX_SIDE = 3, 12


@dataclass(frozen=True)
class RectPieceKind:
    id: int
    w: int
    h: int

    @property
    def name(self) -> str:
        return f"{self.w}x{self.h}"

    @property
    def area(self) -> int:
        return self.w * self.h

    def dims(self, rot: int) -> tuple[int, int]:
        """Footprint (w, h); a 90 degree rotation swaps the sides."""
        return (self.h, self.w) if rot else (self.w, self.h)


RECT_PIECES: tuple[RectPieceKind, ...] = (
    RectPieceKind(0, 1, 2),
    RectPieceKind(1, 2, 3),
    RectPieceKind(2, 1, 5),
)
PIECE_BY_NAME = {p.name: p for p in RECT_PIECES}
# "2x1" in the validation/test inventory is the 1x2 piece rotated.
PIECE_BY_NAME["2x1"] = RECT_PIECES[0]


@dataclass(frozen=True)
class Inventory:
    counts: tuple[int, int, int]

    def __post_init__(self) -> None:
        if len(self.counts) != len(RECT_PIECES) or any(c < 0 for c in self.counts):
            raise DatasetError(f"invalid inventory counts {self.counts}")

    @classmethod
    def for_split(cls, split: str) -> "Inventory":
        return cls((5, 11, 2)) if split == "train" else cls((8, 4, 6))

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def area(self) -> int:
        return sum(c * p.area for c, p in zip(self.counts, RECT_PIECES))

    def is_empty(self) -> bool:
        return self.total == 0

    def take(self, piece_type: int) -> "Inventory":
        counts = list(self.counts)
        if counts[piece_type] <= 0:
            raise InvalidActionError(f"no {RECT_PIECES[piece_type].name} piece left")
        counts[piece_type] -= 1
        return Inventory(tuple(counts))


@dataclass(frozen=True)
class RegionGoal:
    W: int
    H: int

    def __post_init__(self) -> None:
        if not (1 <= self.W <= CANVAS and 1 <= self.H <= CANVAS):
            raise DatasetError(f"region {self.W}x{self.H} does not fit the canvas")

    @property
    def in_dataset_range(self) -> bool:
        """Generated goals use sides in [3, 12]."""
        return MIN_SIDE <= self.W <= MAX_SIDE and MIN_SIDE <= self.H <= MAX_SIDE

    @property
    def area(self) -> int:
        return self.W * self.H

    @property
    def text(self) -> str:
        return f"pack into a {self.W} by {self.H} box"

    def bounds(self) -> tuple[int, int, int, int]:
        """Half-open cell bounds (x0, x1, y0, y1) of the centered region."""
        x0, y0 = -(self.W // 2), -(self.H // 2)
        return x0, x0 + self.W, y0, y0 + self.H

    def contains(self, placement: "Placement") -> bool:
        x0, x1, y0, y1 = self.bounds()
        w, h = placement.dims
        return x0 <= placement.x and placement.x + w <= x1 and y0 <= placement.y and placement.y + h <= y1


@dataclass(frozen=True)
class Placement:
    """Piece type, rotation and lower-left cell."""

    type: int
    rot: int
    x: int
    y: int

    @property
    def dims(self) -> tuple[int, int]:
        return RECT_PIECES[self.type].dims(self.rot)

    def cells(self) -> list[tuple[int, int]]:
        w, h = self.dims
        return [(self.x + i, self.y + j) for i in range(w) for j in range(h)]

    def shifted(self, dx: int, dy: int) -> "Placement":
        return replace(self, x=self.x + dx, y=self.y + dy)


def placement_vertices(p: Placement) -> list[list[int]]:
    w, h = p.dims
    return [[p.x, p.y], [p.x + w, p.y], [p.x + w, p.y + h], [p.x, p.y + h]]


def encode_action(p: Placement) -> int:
    if not (0 <= p.x - COORD_MIN < CANVAS and 0 <= p.y - COORD_MIN < CANVAS):
        raise InvalidActionError(f"placement {p} lies outside the canvas")
    return ((p.type * 2 + p.rot) * CANVAS + (p.x - COORD_MIN)) * CANVAS + (p.y - COORD_MIN)


def decode_action(action: int) -> Placement:
    if not 0 <= action < NUM_RECT_ACTIONS:
        raise InvalidActionError(f"action {action} outside [0, {NUM_RECT_ACTIONS})")
    rest, y = divmod(action, CANVAS)
    kind, x = divmod(rest, CANVAS)
    piece_type, rot = divmod(kind, 2)
    return Placement(piece_type, rot, x + COORD_MIN, y + COORD_MIN)


def _build_footprints() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    footprints = np.zeros((NUM_RECT_ACTIONS, CANVAS * CANVAS), dtype=np.float64)
    inside = np.zeros(NUM_RECT_ACTIONS, dtype=bool)
    types = np.zeros(NUM_RECT_ACTIONS, dtype=np.int64)
    for a in range(NUM_RECT_ACTIONS):
        p = decode_action(a)
        types[a] = p.type
        w, h = p.dims
        if p.x + w - 1 > -COORD_MIN - 1 or p.y + h - 1 > -COORD_MIN - 1:
            continue
        inside[a] = True
        for cx, cy in p.cells():
            footprints[a, (cy - COORD_MIN) * CANVAS + (cx - COORD_MIN)] = 1.0
    return footprints, inside, types


# Cell footprint of every action slot, in canvas-index order (row = y).
FOOTPRINTS, IN_CANVAS, ACTION_TYPES = _build_footprints()


@dataclass(frozen=True)
class RectState:
    placements: tuple[Placement, ...]
    remaining: Inventory
    occupancy: np.ndarray = field(compare=False, repr=False)
    goal: Optional[RegionGoal] = None

    @classmethod
    def empty(cls, pieces: Inventory, goal: Optional[RegionGoal] = None) -> "RectState":
        return cls((), pieces, np.zeros((CANVAS, CANVAS), dtype=bool), goal)

    @property
    def done(self) -> bool:
        return self.remaining.is_empty()


def legal_mask_rect(state: RectState) -> np.ndarray:
    """Remaining count, canvas footprint and collision checks over all 1536 slots."""
    available = np.array(state.remaining.counts)[ACTION_TYPES] > 0
    collides = FOOTPRINTS @ state.occupancy.ravel().astype(np.float64) > 0
    return available & IN_CANVAS & ~collides


def success(state: RectState, goal: RegionGoal) -> bool:
    """All pieces placed, no shared cells, every placement inside the region."""
    if not state.remaining.is_empty():
        return False
    covered = sum(RECT_PIECES[p.type].area for p in state.placements)
    if covered != int(state.occupancy.sum()):
        return False
    return all(goal.contains(p) for p in state.placements)


def oracle_reward(state: RectState) -> float:
    return float(state.goal is not None and success(state, state.goal))


def step_rect(
    state: RectState,
    action: int,
    scorer: Optional[Callable[[RectState], float]] = oracle_reward,
) -> StepOutcome[RectState]:
    """Place one piece.

    The terminal state is scored by ``scorer`` (region success by default,
    or a learned reward); ``scorer=None`` leaves the terminal reward at zero
    for callers that score terminals themselves.
    """
    placement = decode_action(action)
    if not legal_mask_rect(state)[action]:
        raise InvalidActionError(f"action {action} ({placement}) is illegal in this state")
    occupancy = state.occupancy.copy()
    for cx, cy in placement.cells():
        occupancy[cy - COORD_MIN, cx - COORD_MIN] = True
    successor = RectState(
        placements=state.placements + (placement,),
        remaining=state.remaining.take(placement.type),
        occupancy=occupancy,
        goal=state.goal,
    )
    done = successor.done
    reward = float(scorer(successor)) if done and scorer is not None else 0.0
    return StepOutcome(successor, reward, done)


class Difficulty(str, Enum):
    EASY = "Easy"
    MID = "Mid"
    HARD = "Hard"


@dataclass(frozen=True)
class RectConfig:
    region: RegionGoal
    pieces: Inventory
    solution: tuple[Placement, ...]
    signature: str
    split: str = "train"

    @property
    def fill_ratio(self) -> float:
        return self.pieces.area / self.region.area

    @property
    def difficulty(self) -> Difficulty:
        return difficulty(self)


def difficulty(config: RectConfig) -> Difficulty:
    r = config.fill_ratio
    if r < 0.3:
        return Difficulty.EASY
    if r >= 0.7:
        return Difficulty.HARD
    return Difficulty.MID


def config_signature(region: RegionGoal, pieces: Inventory, placements: tuple[Placement, ...]) -> str:
    """Order-independent digest of region, piece multiset and placements."""
    payload = [
        region.W,
        region.H,
        list(pieces.counts),
        sorted([p.type, p.rot, p.x, p.y] for p in placements),
    ]
    return hashlib.sha256(json.dumps(payload).encode("utf-8")).hexdigest()[:16]


def verify_config(config: RectConfig) -> bool:
    """Replay the stored solution; it must consume exactly the piece multiset and succeed."""
    state = RectState.empty(config.pieces, config.region)
    try:
        for p in config.solution:
            state = step_rect(state, encode_action(p), scorer=None).state
    except InvalidActionError:
        return False
    return success(state, config.region)


def config_to_json(config: RectConfig) -> dict[str, Any]:
    return {
        "region": {"W": config.region.W, "H": config.region.H},
        "text": config.region.text,
        "pieces": [
            {"type": p.name, "count": c} for p, c in zip(RECT_PIECES, config.pieces.counts) if c > 0
        ],
        "solution": [
            {
                "type": RECT_PIECES[p.type].name,
                "rot": p.rot * 90,
                "x": p.x,
                "y": p.y,
                "vertices": placement_vertices(p),
            }
            for p in config.solution
        ],
        "signature": config.signature,
        "split": config.split,
        "difficulty": config.difficulty.value,
    }


def config_from_json(data: dict[str, Any]) -> RectConfig:
    try:
        region = RegionGoal(int(data["region"]["W"]), int(data["region"]["H"]))
        counts = [0, 0, 0]
        for entry in data["pieces"]:
            counts[PIECE_BY_NAME[entry["type"]].id] += int(entry["count"])
        solution = tuple(
            Placement(PIECE_BY_NAME[s["type"]].id, int(s["rot"]) // 90, int(s["x"]), int(s["y"]))
            for s in data["solution"]
        )
        split = data.get("split", "train")
        return RectConfig(region, Inventory(tuple(counts)), solution, str(data["signature"]), split)
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetError(f"malformed rectangle config: {e}") from e


class RectEnv:
    """``CompositionEnv`` adapter for rectangle composition."""

    name = "rect"
    num_actions = NUM_RECT_ACTIONS
    feature_dim = CANVAS * CANVAS + len(RECT_PIECES) + 2 * (MAX_SIDE - MIN_SIDE + 1)
    reward_state_dim = CANVAS * CANVAS
    goal_dim = 2 * (MAX_SIDE - MIN_SIDE + 1)
    # Normalizer for remaining counts; no split inventory holds more of one type.
    MAX_COUNT = 20

    def initial_state(self, config: RectConfig, rng: Optional[np.random.Generator] = None) -> RectState:
        return RectState.empty(config.pieces, config.region)

    def legal_mask(self, state: RectState) -> np.ndarray:
        return legal_mask_rect(state)

    def step(self, state: RectState, action: int) -> StepOutcome[RectState]:
        return step_rect(state, action, scorer=None)

    def is_complete(self, state: RectState) -> bool:
        return state.done

    def is_valid(self, state: RectState) -> bool:
        covered = sum(RECT_PIECES[p.type].area for p in state.placements)
        return covered == int(state.occupancy.sum())

    def oracle_score(self, state: RectState) -> float:
        return oracle_reward(state)

    def goal_features(self, goal: Optional[RegionGoal]) -> np.ndarray:
        out = np.zeros(self.goal_dim)
        if goal is not None:
            if not goal.in_dataset_range:
                raise DatasetError(f"region {goal.W}x{goal.H} has no goal encoding")
            out[goal.W - MIN_SIDE] = 1.0
            out[MAX_SIDE - MIN_SIDE + 1 + goal.H - MIN_SIDE] = 1.0
        return out

    def features(self, state: RectState) -> np.ndarray:
        remaining = np.minimum(np.array(state.remaining.counts, dtype=np.float64) / self.MAX_COUNT, 1.0)
        return np.concatenate([
            state.occupancy.ravel().astype(np.float64),
            remaining,
            self.goal_features(state.goal),
        ])

    def reward_features(self, state: RectState) -> tuple[np.ndarray, np.ndarray]:
        return state.occupancy.ravel().astype(np.float64), self.goal_features(state.goal)

    def digest(self, state: RectState) -> str:
        key = json.dumps([sorted([p.type, p.rot, p.x, p.y] for p in state.placements), list(state.remaining.counts)])
        return hashlib.sha1(key.encode("ascii")).hexdigest()[:16]

    def describe(self, state: RectState) -> dict[str, Any]:
        return {
            "placements": [[p.type, p.rot, p.x, p.y] for p in state.placements],
            "remaining": list(state.remaining.counts),
            "region": None if state.goal is None else [state.goal.W, state.goal.H],
        }
