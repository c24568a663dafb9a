"""Unit tests for the tangram action table, masks, transitions and goal scoring."""

import json

import numpy as np
import pytest

from compose_mcts.envs.action_table import (
    footprint,
    load_action_table,
    precompute_action_table,
    reference_frame,
    save_action_table,
)
from compose_mcts.envs.raster import shift_raster
from compose_mcts.envs.tangram import (
    MaskMode,
    TangramEnv,
    TangramGoal,
    TangramState,
    empty_poses,
    gen_tangram_goals,
    goal_from_state,
    initial_state,
    iou_goal_score,
    is_complete,
    is_connected,
    is_valid,
    legal_mask,
    prefix_piece,
    random_assembly,
    render_silhouette,
    static_mask,
    step,
)
from compose_mcts.envs.tangram_pieces import NUM_PIECES, SHAPES, pose_anchors
from compose_mcts.geometry import (
    IDENTITY,
    RigidTransform,
    Vec2,
    canonical_config_hash,
    polygons_overlap,
    transform_polygon,
)
from compose_mcts.lib.exceptions import ChecksumError, DatasetError, EmptyStateError, InvalidActionError

pytestmark = pytest.mark.unit

SQUARE = 5


def single_piece(piece: int, pose: RigidTransform = IDENTITY) -> TangramState:
    poses = list(empty_poses())
    poses[piece] = pose
    return TangramState(tuple(poses))


def full_rollout(table, rng: np.random.Generator) -> list[TangramState]:
    """States visited by a uniformly random Full-mode rollout."""
    state = initial_state(rng)
    visited = [state]
    while not state.done:
        idx = np.flatnonzero(legal_mask(state, table, MaskMode.FULL))
        if idx.size == 0:
            break
        state = step(state, int(rng.choice(idx)), table, MaskMode.FULL).state
        visited.append(state)
    return visited


class TestActionTable:
    def test_size_band(self, action_table):
        assert 1500 <= action_table.size <= 6000
        assert action_table.metadata["count"] == action_table.size

    def test_entries_are_overlap_free(self, action_table):
        for action, pose in zip(action_table.actions, action_table.poses):
            moved = transform_polygon(pose, SHAPES[action.moved])
            ref = transform_polygon(reference_frame(action.ref_flip), SHAPES[action.reference])
            assert not polygons_overlap(moved, ref), action

    def test_entries_cover_distinct_regions_per_pair(self, action_table):
        keys = {
            (a.moved, a.reference, a.ref_flip, footprint(transform_polygon(pose, SHAPES[a.moved])))
            for a, pose in zip(action_table.actions, action_table.poses)
        }
        assert len(keys) == action_table.size

    def test_every_ordered_pair_keeps_its_own_entries(self, action_table):
        pairs = {(a.moved, a.reference) for a in action_table.actions}
        assert pairs == {(m, r) for m in range(NUM_PIECES) for r in range(NUM_PIECES) if m != r}
        # The two small triangles are congruent, yet each direction is enumerated in full.
        forward = sum(1 for a in action_table.actions if (a.moved, a.reference) == (0, 1))
        backward = sum(1 for a in action_table.actions if (a.moved, a.reference) == (1, 0))
        assert forward == backward > 0

    def test_saved_table_loads_with_same_digest(self, action_table, tmp_path):
        path = save_action_table(action_table, tmp_path / "actions.json")
        assert load_action_table(path).digest() == action_table.digest()

    def test_corrupted_entry_is_detected(self, action_table, tmp_path):
        path = save_action_table(action_table, tmp_path / "actions.json")
        document = json.loads(path.read_text(encoding="utf-8"))
        document["actions"][0]["rot"] = (document["actions"][0]["rot"] + 1) % 8
        path.write_text(json.dumps(document), encoding="utf-8")
        with pytest.raises(ChecksumError):
            load_action_table(path)

    def test_truncated_file_is_detected(self, tmp_path):
        path = tmp_path / "actions.json"
        path.write_text('{"metadata": {', encoding="utf-8")
        with pytest.raises(ChecksumError):
            load_action_table(path)

    @pytest.mark.slow
    def test_precomputation_is_deterministic(self, action_table):
        assert precompute_action_table().digest() == action_table.digest()


class TestMasks:
    def test_partial_equals_full_with_one_piece(self, action_table):
        state = initial_state(np.random.default_rng(0))
        partial = legal_mask(state, action_table, MaskMode.PARTIAL)
        full = legal_mask(state, action_table, MaskMode.FULL)
        assert partial.any()
        np.testing.assert_array_equal(partial, full)

    def test_full_mask_is_subset_of_static(self, action_table):
        for state in full_rollout(action_table, np.random.default_rng(1)):
            static = static_mask(state, action_table)
            full = legal_mask(state, action_table, MaskMode.FULL)
            assert not (full & ~static).any()

    def test_finished_state_has_no_legal_action(self, action_table):
        state = random_assembly(action_table, np.random.default_rng(2))
        assert not legal_mask(state, action_table, MaskMode.PARTIAL).any()
        assert not legal_mask(state, action_table, MaskMode.FULL).any()

    def test_overlapping_action_differs_between_modes(self, action_table):
        rng = np.random.default_rng(3)
        found = None
        for _ in range(20):
            for state in full_rollout(action_table, rng):
                gap = static_mask(state, action_table) & ~legal_mask(state, action_table, MaskMode.FULL)
                if gap.any():
                    found = state, int(np.flatnonzero(gap)[0])
                    break
            if found:
                break
        assert found is not None
        state, action = found

        outcome = step(state, action, action_table, MaskMode.PARTIAL)
        assert outcome.reward == -1.0
        assert outcome.done
        assert outcome.state.failed
        assert outcome.state.num_placed == state.num_placed

        with pytest.raises(InvalidActionError):
            step(state, action, action_table, MaskMode.FULL)


class TestTransitions:
    def test_out_of_range_action(self, action_table):
        state = initial_state(np.random.default_rng(0))
        with pytest.raises(InvalidActionError):
            step(state, action_table.size, action_table)

    def test_statically_masked_action_is_rejected(self, action_table):
        state = initial_state(np.random.default_rng(0), first_piece=0)
        blocked = int(np.flatnonzero(~static_mask(state, action_table))[0])
        with pytest.raises(InvalidActionError):
            step(state, blocked, action_table)

    def test_anchors_coincide_after_placement(self, action_table):
        rng = np.random.default_rng(4)
        state = initial_state(rng)
        while not state.done:
            idx = np.flatnonzero(legal_mask(state, action_table))
            if idx.size == 0:
                break
            action = int(rng.choice(idx))
            state = step(state, action, action_table).state
            entry = action_table.actions[action]
            moved = pose_anchors(entry.moved, state.poses[entry.moved])[entry.moved_anchor]
            ref = pose_anchors(entry.reference, state.poses[entry.reference])[entry.ref_anchor]
            assert moved == ref

    def test_full_mode_rollouts_stay_valid_and_connected(self, action_table):
        rng = np.random.default_rng(5)
        for _ in range(5):
            for state in full_rollout(action_table, rng):
                assert is_valid(state)
                assert is_connected(state)

    def test_random_assembly_places_all_pieces(self, action_table):
        state = random_assembly(action_table, np.random.default_rng(6))
        assert is_complete(state)
        assert state.num_placed == NUM_PIECES
        assert state.step_count == NUM_PIECES - 1


class TestRaster:
    def test_square_covers_sixty_four_cells(self):
        # Side 2 on a 16-unit canvas at 64 cells per side: 8 x 8 cells.
        assert int(render_silhouette(single_piece(SQUARE)).sum()) == 64

    def test_unit_shift_moves_four_cells(self):
        base = render_silhouette(single_piece(SQUARE))
        moved = render_silhouette(single_piece(SQUARE, RigidTransform(t=Vec2.of(1, 1))))
        np.testing.assert_array_equal(moved, shift_raster(base, 4, 4))

    def test_empty_state_cannot_be_rendered(self):
        with pytest.raises(EmptyStateError):
            render_silhouette(TangramState(empty_poses()))


class TestGoals:
    def test_source_configuration_scores_itself(self, action_table):
        state = random_assembly(action_table, np.random.default_rng(7))
        goal = goal_from_state(state, "self")
        assert iou_goal_score(state, goal) >= 0.95

    def test_goal_score_needs_complete_state(self, action_table):
        state = random_assembly(action_table, np.random.default_rng(7))
        goal = goal_from_state(state, "self")
        with pytest.raises(EmptyStateError):
            iou_goal_score(initial_state(np.random.default_rng(0)), goal)

    def test_generated_goals_come_from_distinct_assemblies(self, action_table):
        goals = gen_tangram_goals(action_table, 4, seed=3)
        hashes = {
            canonical_config_hash([(i, pose) for i, pose in enumerate(goal.source_poses)], SHAPES) for goal in goals
        }
        assert len(hashes) == 4
        assert [goal.source_id for goal in goals] == [f"goal-{i:05d}" for i in range(4)]

    def test_empty_goal_mask_is_rejected(self):
        with pytest.raises(DatasetError):
            TangramGoal(target_mask=np.zeros((64, 64), dtype=bool), source_id="blank")

    def test_prefix_piece_sits_at_origin(self, action_table):
        state = random_assembly(action_table, np.random.default_rng(8))
        goal = goal_from_state(state, "prefix")
        piece = prefix_piece(goal)
        assert piece is not None
        assert goal.source_poses[piece] == IDENTITY


class TestTangramEnv:
    def test_feature_dimensions(self, action_table):
        env = TangramEnv(action_table)
        goal = goal_from_state(random_assembly(action_table, np.random.default_rng(9)), "g")
        state = env.initial_state(goal, np.random.default_rng(0))
        assert env.features(state).shape == (env.feature_dim,)
        states, goals = env.reward_features(state)
        assert states.shape == (env.reward_state_dim,)
        assert goals.shape == (env.goal_dim,)

    def test_prefix_start_uses_goal_piece(self, action_table):
        env = TangramEnv(action_table, MaskMode.PARTIAL)
        goal = goal_from_state(random_assembly(action_table, np.random.default_rng(10)), "g")
        state = env.initial_state(goal, np.random.default_rng(0), use_prefix=True)
        assert state.placed == [prefix_piece(goal)]

    def test_digest_distinguishes_failed_states(self, action_table):
        env = TangramEnv(action_table)
        state = single_piece(SQUARE)
        assert env.digest(state) != env.digest(TangramState(state.poses, failed=True))
