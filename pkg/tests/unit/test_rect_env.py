"""Unit tests for the rectangle composition environment and dataset generator."""

from dataclasses import replace

import numpy as np
import pytest

from compose_mcts.envs.rect import (
    NUM_RECT_ACTIONS,
    Difficulty,
    Inventory,
    Placement,
    RectState,
    RegionGoal,
    decode_action,
    encode_action,
    legal_mask_rect,
    oracle_reward,
    step_rect,
    success,
    verify_config,
)
from compose_mcts.envs.rect_dataset import gen_dataset, generate_tiling, load_split, make_problem, save_split
from compose_mcts.lib.exceptions import DatasetError, InvalidActionError

pytestmark = pytest.mark.unit


class TestActions:
    def test_action_space_size(self):
        assert NUM_RECT_ACTIONS == 1536

    def test_encode_decode_example(self):
        placement = Placement(type=1, rot=1, x=-3, y=2)
        assert decode_action(encode_action(placement)) == placement

    def test_out_of_range_action(self):
        with pytest.raises(InvalidActionError):
            decode_action(NUM_RECT_ACTIONS)
        with pytest.raises(InvalidActionError):
            encode_action(Placement(0, 0, 12, 0))

    def test_single_domino_legal_count(self):
        state = RectState.empty(Inventory((1, 0, 0)))
        # 16 x 15 upright placements plus 15 x 16 lying ones.
        assert int(legal_mask_rect(state).sum()) == 480

    def test_collision_is_masked(self):
        state = RectState.empty(Inventory((2, 0, 0)))
        action = encode_action(Placement(0, 0, 0, 0))
        state = step_rect(state, action).state
        assert not legal_mask_rect(state)[action]
        with pytest.raises(InvalidActionError):
            step_rect(state, action)

    def test_exhausted_piece_type_is_masked(self):
        state = RectState.empty(Inventory((1, 1, 0)))
        state = step_rect(state, encode_action(Placement(0, 0, -8, -8))).state
        mask = legal_mask_rect(state)
        assert not mask[encode_action(Placement(0, 0, 4, 4))]
        assert mask[encode_action(Placement(1, 0, 4, 4))]


class TestStep:
    def test_step_places_and_decrements(self, small_square_config):
        state = RectState.empty(small_square_config.pieces, small_square_config.region)
        outcome = step_rect(state, encode_action(small_square_config.solution[0]))
        assert outcome.state.remaining.counts == (1, 1, 0)
        assert int(outcome.state.occupancy.sum()) == 2
        assert not outcome.done
        assert outcome.reward == 0.0

    def test_terminal_reward_is_region_success(self, small_square_config):
        state = RectState.empty(small_square_config.pieces, small_square_config.region)
        for p in small_square_config.solution:
            outcome = step_rect(state, encode_action(p))
            state = outcome.state
        assert outcome.done
        assert outcome.reward == 1.0
        assert success(state, small_square_config.region)

    def test_placement_outside_region_fails(self, small_square_config):
        state = RectState.empty(small_square_config.pieces, small_square_config.region)
        moved = [small_square_config.solution[0].shifted(5, 0), *small_square_config.solution[1:]]
        for p in moved:
            state = step_rect(state, encode_action(p)).state
        assert state.done
        assert oracle_reward(state) == 0.0

    def test_learned_scorer_replaces_region_check(self, small_square_config):
        state = RectState.empty(small_square_config.pieces, small_square_config.region)
        for p in small_square_config.solution:
            outcome = step_rect(state, encode_action(p), scorer=lambda s: 0.25)
            state = outcome.state
        assert outcome.reward == 0.25


class TestEnvAdapter:
    def test_feature_dimensions(self, rect_env, small_square_config):
        state = rect_env.initial_state(small_square_config)
        assert rect_env.features(state).shape == (rect_env.feature_dim,)
        states, goals = rect_env.reward_features(state)
        assert states.shape == (rect_env.reward_state_dim,)
        assert goals.shape == (rect_env.goal_dim,)

    def test_goal_outside_dataset_range_has_no_encoding(self, rect_env):
        with pytest.raises(DatasetError):
            rect_env.goal_features(RegionGoal(2, 3))

    def test_digest_ignores_placement_order(self, rect_env, small_square_config):
        forward = rect_env.initial_state(small_square_config)
        backward = rect_env.initial_state(small_square_config)
        for p in small_square_config.solution:
            forward = rect_env.step(forward, encode_action(p)).state
        for p in reversed(small_square_config.solution):
            backward = rect_env.step(backward, encode_action(p)).state
        assert rect_env.digest(forward) == rect_env.digest(backward)

    def test_env_step_leaves_terminal_reward_to_scorer(self, rect_env, small_square_config):
        state = rect_env.initial_state(small_square_config)
        for p in small_square_config.solution:
            outcome = rect_env.step(state, encode_action(p))
            state = outcome.state
        assert outcome.reward == 0.0
        assert rect_env.is_complete(state)
        assert rect_env.oracle_score(state) == 1.0


class TestTiling:
    def test_two_by_three_with_three_dominos(self):
        region = RegionGoal(2, 3)
        tiling = generate_tiling(region, Inventory((3, 0, 0)), np.random.default_rng(0))
        assert tiling is not None
        assert len(tiling) == 3
        assert sum(len(p.cells()) for p in tiling) == 6

    def test_odd_area_is_rejected(self):
        assert generate_tiling(RegionGoal(3, 3), Inventory((5, 11, 2)), np.random.default_rng(0)) is None

    def test_region_larger_than_inventory_is_rejected(self):
        assert generate_tiling(RegionGoal(4, 4), Inventory((2, 0, 0)), np.random.default_rng(0)) is None

    def test_problem_keeps_a_subset_centered_in_the_region(self):
        rng = np.random.default_rng(4)
        region = RegionGoal(6, 4)
        tiling = generate_tiling(region, Inventory.for_split("train"), rng)
        config = make_problem(region, tiling, rng, keep_fraction=0.5)
        assert 1 <= len(config.solution) <= len(tiling)
        assert all(region.contains(p) for p in config.solution)
        assert verify_config(config)


class TestVerify:
    def test_solution_verifies(self, small_square_config):
        assert verify_config(small_square_config)

    def test_shifted_solution_fails(self, small_square_config):
        moved = (small_square_config.solution[0].shifted(20, 0),) + small_square_config.solution[1:]
        assert not verify_config(replace(small_square_config, solution=moved))

    def test_multiset_mismatch_fails(self, small_square_config):
        assert not verify_config(replace(small_square_config, pieces=Inventory((3, 1, 0))))

    def test_difficulty_thresholds(self, make_config):
        domino = [Placement(0, 0, -6, -6)]
        assert make_config(RegionGoal(12, 12), domino).difficulty is Difficulty.EASY
        assert make_config(RegionGoal(2, 4), domino).fill_ratio == 0.25
        full = [Placement(0, 0, -2, -2), Placement(0, 0, -1, -2), Placement(0, 0, 0, -2), Placement(0, 0, 1, -2)]
        assert make_config(RegionGoal(4, 2), full).difficulty is Difficulty.HARD
        mid = full[:2]
        assert make_config(RegionGoal(4, 2), mid).difficulty is Difficulty.MID


class TestDataset:
    def test_small_dataset_is_valid_and_unique(self, tmp_path):
        dataset = gen_dataset({"train": 4, "val": 2, "test": 2}, seed=5, node_limit=20_000)
        configs = [c for split in dataset.values() for c in split]
        assert all(verify_config(c) for c in configs)
        assert len({c.signature for c in configs}) == len(configs)
        for c in configs:
            ratio = c.pieces.area / c.region.area
            expected = "Easy" if ratio < 0.3 else "Hard" if ratio >= 0.7 else "Mid"
            assert c.difficulty.value == expected

    def test_split_inventories(self):
        assert Inventory.for_split("train").counts == (5, 11, 2)
        assert Inventory.for_split("test").counts == (8, 4, 6)

    def test_generation_is_deterministic(self):
        first = gen_dataset({"train": 3}, seed=9, node_limit=20_000)
        second = gen_dataset({"train": 3}, seed=9, node_limit=20_000)
        assert [c.signature for c in first["train"]] == [c.signature for c in second["train"]]

    def test_saved_split_loads_back(self, tmp_path, small_square_config):
        path = save_split([small_square_config], tmp_path / "train.json")
        loaded = load_split(path)
        assert loaded[0].signature == small_square_config.signature
        assert loaded[0].solution == small_square_config.solution

    def test_malformed_split(self, tmp_path):
        path = tmp_path / "train.json"
        path.write_text('[{"region": {"W": 4}}]', encoding="utf-8")
        with pytest.raises(DatasetError):
            load_split(path)


@pytest.mark.slow
def test_desk_scale_dataset():
    dataset = gen_dataset({"train": 200, "val": 20, "test": 50}, seed=0)
    configs = [c for split in dataset.values() for c in split]
    assert len(configs) == 270
    assert all(verify_config(c) for c in configs)
    assert len({c.signature for c in configs}) == 270
