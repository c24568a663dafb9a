"""Integration tests for the adversarial training loop on small rectangle tasks."""

import json

import numpy as np
import pytest

from compose_mcts.envs.tangram import TangramEnv, gen_tangram_goals
from compose_mcts.lib.exceptions import DatasetError
from compose_mcts.models.checkpoint import latest_checkpoint
from compose_mcts.services.trainer import (
    AdversarialTrainer,
    ImprovementOperator,
    IterationReport,
    RewardSource,
    demonstration,
    load_policy,
)

pytestmark = pytest.mark.integration


def assert_same_params(a: dict, b: dict) -> None:
    assert a.keys() == b.keys()
    for name in a:
        np.testing.assert_array_equal(a[name], b[name])


class TestAdversarialTrainer:
    def test_run_writes_reports_and_checkpoints(self, tmp_path, rect_env, tiny_rect_tasks, tiny_training_config):
        train, val = tiny_rect_tasks[:4], tiny_rect_tasks[4:]
        trainer = AdversarialTrainer(tiny_training_config, rect_env, train, val, tmp_path)
        result = trainer.train()

        assert result.iterations_completed == 2
        assert not result.stopped_early
        assert [r.iteration for r in result.reports] == [1, 2]
        for report in result.reports:
            assert 0.0 <= report.mean_terminal_reward <= 1.0
            assert 0.0 <= report.validity_rate <= 1.0
            assert report.reward_auc is None or 0.0 <= report.reward_auc <= 1.0
        assert result.reports[-1].negatives == 2 * tiny_training_config.episodes_per_iteration

        checkpoints = sorted(p.name for p in (tmp_path / "checkpoints").glob("*.json"))
        assert checkpoints == ["000.json", "001.json", "002.json"]
        lines = (tmp_path / "reports.jsonl").read_text(encoding="utf-8").splitlines()
        assert [json.loads(line)["iteration"] for line in lines] == [1, 2]
        assert (tmp_path / "trajectories" / "002.jsonl").is_file()

    def test_resume_matches_uninterrupted_run(self, tmp_path, rect_env, tiny_rect_tasks, tiny_training_config):
        straight = AdversarialTrainer(tiny_training_config, rect_env, tiny_rect_tasks, run_dir=tmp_path / "a")
        straight.train()

        first_half = tiny_training_config.model_copy(update={"iterations": 1})
        AdversarialTrainer(first_half, rect_env, tiny_rect_tasks, run_dir=tmp_path / "b").train()
        resumed = AdversarialTrainer(tiny_training_config, rect_env, tiny_rect_tasks, run_dir=tmp_path / "b")
        result = resumed.train(resume=True)

        assert result.iterations_completed == 2
        assert [r.iteration for r in result.reports] == [2]
        assert_same_params(resumed.policy.params, straight.policy.params)
        assert_same_params(resumed.reward.params, straight.reward.params)
        assert resumed.history == straight.history

    def test_same_seed_same_networks(self, rect_env, tiny_rect_tasks, tiny_training_config):
        first = AdversarialTrainer(tiny_training_config, rect_env, tiny_rect_tasks).train()
        second = AdversarialTrainer(tiny_training_config, rect_env, tiny_rect_tasks).train()
        assert_same_params(first.policy.params, second.policy.params)

    def test_ppo_operator(self, rect_env, tiny_rect_tasks, tiny_training_config):
        config = tiny_training_config.model_copy(update={"operator": ImprovementOperator.PPO})
        result = AdversarialTrainer(config, rect_env, tiny_rect_tasks).train()
        assert "surrogate" in result.reports[-1].losses

    def test_without_adversarial_updates_reward_is_frozen(self, rect_env, tiny_rect_tasks, tiny_training_config):
        config = tiny_training_config.model_copy(update={"use_adversarial": False, "pretrain_reward": False})
        untouched = AdversarialTrainer(config, rect_env, tiny_rect_tasks)
        result = AdversarialTrainer(config, rect_env, tiny_rect_tasks).train()
        assert_same_params(result.reward.params, untouched.reward.params)
        assert not any(key.startswith("reward_") for key in result.reports[-1].losses)

    def test_oracle_reward_source(self, rect_env, tiny_rect_tasks, tiny_training_config):
        config = tiny_training_config.model_copy(update={"reward_source": RewardSource.ORACLE})
        result = AdversarialTrainer(config, rect_env, tiny_rect_tasks).train()
        assert all(0.0 <= r.mean_terminal_reward <= 1.0 for r in result.reports)
        assert all(r.success_rate is not None for r in result.reports)

    def test_behaviour_cloning_moves_policy(self, rect_env, tiny_rect_tasks, tiny_training_config):
        config = tiny_training_config.model_copy(update={"bc_epochs": 2, "pretrain_reward": False})
        trainer = AdversarialTrainer(config, rect_env, tiny_rect_tasks)
        before = {k: v.copy() for k, v in trainer.policy.params.items()}
        summary = trainer.behaviour_clone()
        assert summary["loss"] > 0.0
        assert not np.array_equal(before["Wp"], trainer.policy.params["Wp"])

    def test_checkpoint_loads_as_policy(self, tmp_path, rect_env, tiny_rect_tasks, tiny_training_config):
        trainer = AdversarialTrainer(tiny_training_config, rect_env, tiny_rect_tasks, run_dir=tmp_path)
        trainer.train()
        policy = load_policy(latest_checkpoint(tmp_path / "checkpoints"), rect_env)
        assert_same_params(policy.params, trainer.policy.params)

    def test_empty_dataset(self, rect_env, tiny_training_config):
        with pytest.raises(DatasetError):
            AdversarialTrainer(tiny_training_config, rect_env, [])

    @pytest.mark.slow
    def test_parallel_episodes_match_serial(self, rect_env, tiny_rect_tasks, tiny_training_config):
        serial = AdversarialTrainer(tiny_training_config, rect_env, tiny_rect_tasks, jobs=1).train()
        parallel = AdversarialTrainer(tiny_training_config, rect_env, tiny_rect_tasks, jobs=2).train()
        assert_same_params(serial.policy.params, parallel.policy.params)

    @pytest.mark.slow
    def test_tangram_iteration(self, action_table, tiny_training_config):
        env = TangramEnv(action_table)
        goals = gen_tangram_goals(action_table, 3, seed=1)
        update = {"env": "tangram", "iterations": 1, "episodes_per_iteration": 2}
        config = tiny_training_config.model_copy(update=update)
        result = AdversarialTrainer(config, env, goals).train()
        report = result.reports[0]
        assert report.success_rate is None
        assert 0.0 <= report.validity_rate <= 1.0


class TestDemonstration:
    def test_solution_replay_is_one_hot_and_successful(self, rect_env, small_square_config):
        trajectory = demonstration(rect_env, small_square_config)
        assert len(trajectory.steps) == 3
        assert all(step.policy.sum() == 1.0 and step.policy[step.action] == 1.0 for step in trajectory.steps)
        assert trajectory.terminal_reward == 1.0


class TestIterationReport:
    def test_rates_must_lie_in_unit_interval(self):
        with pytest.raises(ValueError):
            IterationReport(
                iteration=1, step=1, mean_terminal_reward=0.0, validity_rate=1.5,
                success_rate=None, reward_auc=None, dead_ends=0, negatives=0,
            )
