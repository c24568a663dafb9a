"""Synthetic rectangle-composition dataset.

A region is tiled exactly by backtracking over the first uncovered cell,
then a random subset of the tiling is kept as the problem. The kept pieces
fit the region by construction, so every problem has a known solution.
"""

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from ..lib.exceptions import DataError, DatasetError
from ..lib.seeding import task_rng
from .rect import (
    MAX_SIDE,
    MIN_SIDE,
    RECT_PIECES,
    Inventory,
    Placement,
    RectConfig,
    RegionGoal,
    config_from_json,
    config_signature,
    config_to_json,
    verify_config,
)

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
KEEP_FRACTION_RANGE = (0.3, 1.0)


class _NodeLimit(Exception):
    pass


def generate_tiling(
    region: RegionGoal,
    inventory: Inventory,
    rng: np.random.Generator,
    node_limit: int = 200_000,
) -> Optional[list[Placement]]:
    """Exact tiling of the region in region-local cells, or None.

    Odd-area regions are rejected before search. The search gives up after
    ``node_limit`` expanded nodes.
    """
    if region.area % 2:
        return None
    if region.area > inventory.area:
        return None
    covered = np.zeros((region.H, region.W), dtype=bool)
    counts = list(inventory.counts)
    placed: list[Placement] = []
    nodes = 0

    def fits(x: int, y: int, w: int, h: int) -> bool:
        return x + w <= region.W and y + h <= region.H and not covered[y: y + h, x: x + w].any()

    def search() -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            raise _NodeLimit
        free = np.flatnonzero(~covered.ravel())
        if free.size == 0:
            return True
        y, x = divmod(int(free[0]), region.W)
        for choice in rng.permutation(len(RECT_PIECES) * 2):
            piece_type, rot = divmod(int(choice), 2)
            if counts[piece_type] == 0:
                continue
            w, h = RECT_PIECES[piece_type].dims(rot)
            if not fits(x, y, w, h):
                continue
            covered[y: y + h, x: x + w] = True
            counts[piece_type] -= 1
            placed.append(Placement(piece_type, rot, x, y))
            if search():
                return True
            placed.pop()
            counts[piece_type] += 1
            covered[y: y + h, x: x + w] = False
        return False

    try:
        found = search()
    except _NodeLimit:
        logger.debug(f"Tiler hit node limit for region {region.W}x{region.H}")
        return None
    return placed if found else None


def make_problem(
    region: RegionGoal,
    tiling: list[Placement],
    rng: np.random.Generator,
    split: str = "train",
    keep_fraction: Optional[float] = None,
) -> RectConfig:
    """Keep a uniform fraction of the tiling (at least one piece) and center it."""
    if not tiling:
        raise DatasetError("cannot build a problem from an empty tiling")
    fraction = rng.uniform(*KEEP_FRACTION_RANGE) if keep_fraction is None else keep_fraction
    keep = max(1, int(round(fraction * len(tiling))))
    chosen = np.sort(rng.choice(len(tiling), size=keep, replace=False))
    dx, dy = -(region.W // 2), -(region.H // 2)
    solution = tuple(tiling[i].shifted(dx, dy) for i in chosen)
    counts = [0] * len(RECT_PIECES)
    for p in solution:
        counts[p.type] += 1
    pieces = Inventory(tuple(counts))
    return RectConfig(region, pieces, solution, config_signature(region, pieces, solution), split)


def sample_region(rng: np.random.Generator, inventory: Inventory) -> Optional[RegionGoal]:
    """Uniform W, H in [3, 12]; None unless the area is even and coverable."""
    w, h = (int(v) for v in rng.integers(MIN_SIDE, MAX_SIDE + 1, size=2))
    if (w * h) % 2 or w * h > inventory.area:
        return None
    return RegionGoal(w, h)


def gen_split(
    split: str,
    count: int,
    rng: np.random.Generator,
    seen: set[str],
    max_attempts_factor: int = 200,
    node_limit: int = 200_000,
) -> list[RectConfig]:
    """Generate up to ``count`` configs with signatures not in ``seen``."""
    inventory = Inventory.for_split(split)
    configs: list[RectConfig] = []
    attempts = 0
    budget = max_attempts_factor * max(count, 1)
    while len(configs) < count and attempts < budget:
        attempts += 1
        region = sample_region(rng, inventory)
        if region is None:
            continue
        tiling = generate_tiling(region, inventory, rng, node_limit)
        if tiling is None:
            continue
        config = make_problem(region, tiling, rng, split)
        if config.signature in seen:
            continue
        if not verify_config(config):
            raise DatasetError(f"generated config {config.signature} does not verify")
        seen.add(config.signature)
        configs.append(config)
    if len(configs) < count:
        logger.warning(f"Split {split}: only {len(configs)}/{count} unique configs after {attempts} attempts")
    else:
        logger.info(f"Split {split}: {count} configs in {attempts} attempts")
    return configs


def gen_dataset(
    counts: dict[str, int],
    seed: int,
    max_attempts_factor: int = 200,
    node_limit: int = 200_000,
) -> dict[str, list[RectConfig]]:
    """All splits, unique signatures across the whole dataset."""
    seen: set[str] = set()
    dataset = {}
    for index, split in enumerate(SPLITS):
        if split not in counts:
            continue
        dataset[split] = gen_split(
            split, counts[split], task_rng(seed, index), seen, max_attempts_factor, node_limit
        )
    return dataset


def save_split(configs: list[RectConfig], path: Path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps([config_to_json(c) for c in configs], indent=1), encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write {path}: {e}") from e
    return path


def load_split(path: Path) -> list[RectConfig]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"Cannot read dataset split {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetError(f"Dataset split {path} is not valid JSON: {e}") from e
    if not isinstance(data, list):
        raise DatasetError(f"Dataset split {path} must be a list of configs")
    return [config_from_json(entry) for entry in data]
