"""Shared fixtures for the compose-mcts test suite."""

import numpy as np
import pytest

from compose_mcts.envs.action_table import precompute_action_table
from compose_mcts.envs.rect import Inventory, Placement, RectConfig, RectEnv, RegionGoal, config_signature
from compose_mcts.envs.rect_dataset import generate_tiling, make_problem
from compose_mcts.search.gumbel import SearchParams
from compose_mcts.services.trainer import TrainingConfig


def solved_config(region: RegionGoal, solution: list[Placement], split: str = "train") -> RectConfig:
    """Config whose pieces are exactly the given (region-centered) solution."""
    counts = [0, 0, 0]
    for p in solution:
        counts[p.type] += 1
    pieces = Inventory(tuple(counts))
    return RectConfig(region, pieces, tuple(solution), config_signature(region, pieces, tuple(solution)), split)


@pytest.fixture
def rect_env() -> RectEnv:
    return RectEnv()


@pytest.fixture
def small_square_config() -> RectConfig:
    """4x4 region packed with two 1x2 pieces side by side and one 2x3 piece."""
    region = RegionGoal(4, 4)
    solution = [
        Placement(0, 0, -2, -2),
        Placement(0, 0, -1, -2),
        Placement(1, 0, 0, -2),
    ]
    return solved_config(region, solution)


@pytest.fixture
def tiny_rect_tasks() -> list[RectConfig]:
    """A handful of small solvable rectangle problems with distinct regions."""
    rng = np.random.default_rng(11)
    inventory = Inventory.for_split("train")
    tasks = []
    for w, h in [(3, 4), (4, 4), (4, 3), (3, 6), (6, 4), (4, 5)]:
        region = RegionGoal(w, h)
        tiling = generate_tiling(region, inventory, rng, node_limit=50_000)
        assert tiling is not None
        tasks.append(make_problem(region, tiling, rng, keep_fraction=0.5))
    return tasks


@pytest.fixture
def tiny_training_config() -> TrainingConfig:
    """Network and search sizes small enough for a test run."""
    return TrainingConfig(
        seed=3,
        iterations=2,
        episodes_per_iteration=3,
        policy_hidden=8,
        reward_hidden=8,
        reward_embed=4,
        pretrain_steps=4,
        eval_every=2,
        patience=2,
        reward_batch=2,
        batch_size=16,
        retrieval_candidates=3,
        search=SearchParams(num_simulations=4, num_sampled=2),
    )


@pytest.fixture(scope="session")
def action_table():
    """The tangram action table, enumerated once per session."""
    return precompute_action_table()


@pytest.fixture
def make_config():
    """Factory for configs built from an explicit solution."""
    return solved_config
