"""Generative adversarial training of the policy/value and reward networks.

Each iteration plans a batch of self-play episodes with the current
networks, improves the policy from the planning targets (MuZero-style
imitation or PPO), and refines the reward model with the generated
terminal states as negatives against dataset states as positives.
"""

import json
import logging
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..envs.rect import RectConfig, encode_action
from ..envs.tangram import TangramGoal, source_state
from ..lib.config import RunConfig
from ..lib.exceptions import DataError, DatasetError, NumericAbort
from ..lib.seeding import task_rng
from ..models.checkpoint import (
    decode_adam,
    decode_params,
    decode_tensor,
    encode_adam,
    encode_params,
    encode_tensor,
    latest_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from ..models.features import PairBatch, TrainBatch, plan_batch, stack_pairs
from ..models.policy_value import POLICY_LR, PolicyValueNet, minibatches, policy_value_update, target_entropy
from ..models.ppo import CLIP, ppo_update, rollout_log_probs
from ..models.reward import (
    REWARD_LR,
    TEMPERATURE,
    RewardNet,
    auc,
    contrastive_update,
    retrieval_accuracy,
    reward_update,
)
from ..search.gumbel import GumbelSearch, SearchParams, run_episode
from ..search.rollout import sample_episode
from ..search.trajectory import PlanStep, PlanTrajectory, write_trajectories
from .metrics import success_rate, validity_rate

logger = logging.getLogger(__name__)

# Independent random streams keyed by (seed, stream, ...).
STREAM_INIT = 0
STREAM_TASKS = 1
STREAM_EPISODE = 2
STREAM_UPDATE = 3
STREAM_PRETRAIN = 4


class ImprovementOperator(str, Enum):
    MUZERO = "muzero"
    PPO = "ppo"


class RewardSource(str, Enum):
    LEARNED = "learned"
    ORACLE = "oracle"


class TrainingConfig(BaseModel):
    """Knobs of the adversarial training loop, ablations included."""

    model_config = ConfigDict(extra="forbid")

    env: Literal["rect", "tangram"] = "rect"
    seed: int = 0
    iterations: int = Field(default=20, ge=1)
    episodes_per_iteration: int = Field(default=64, ge=1)
    operator: ImprovementOperator = ImprovementOperator.MUZERO
    lam: float = Field(default=1.0, ge=0.0)
    policy_lr: float = Field(default=POLICY_LR, gt=0.0)
    reward_lr: float = Field(default=REWARD_LR, gt=0.0)
    search: SearchParams = Field(default_factory=SearchParams)
    use_adversarial: bool = True
    pretrain_reward: bool = True
    mask_mode: Literal["full", "partial"] = "full"
    reward_source: RewardSource = RewardSource.LEARNED
    use_prefix: bool = False
    policy_epochs: int = Field(default=1, ge=1)
    batch_size: int = Field(default=256, ge=1)
    reward_batch: int = Field(default=64, ge=2)
    pretrain_steps: int = Field(default=2000, ge=0)
    eval_every: int = Field(default=50, ge=1)
    patience: int = Field(default=10, ge=1)
    retrieval_candidates: int = Field(default=20, ge=2)
    negative_capacity: int = Field(default=10_000, ge=1)
    plateau_window: int = Field(default=5, ge=1)
    plateau_delta: float = Field(default=0.005, ge=0.0)
    policy_hidden: int = Field(default=256, ge=1)
    reward_hidden: int = Field(default=128, ge=1)
    reward_embed: int = Field(default=64, ge=1)
    bc_epochs: int = Field(default=0, ge=0)
    temperature: float = Field(default=TEMPERATURE, gt=0.0)
    ppo_clip: float = Field(default=CLIP, gt=0.0, lt=1.0)


class TrainRunConfig(TrainingConfig, RunConfig):
    """``train`` command: the loop settings plus inputs and the run directory."""

    out: Path = Path("runs/train")
    data: Path = Path("data")
    actions: Optional[Path] = None
    resume: bool = False


@dataclass
class IterationReport:
    """Summary of one training iteration."""
    iteration: int
    step: int
    mean_terminal_reward: float
    validity_rate: float
    success_rate: Optional[float]
    reward_auc: Optional[float]
    dead_ends: int
    negatives: int
    losses: dict[str, float] = field(default_factory=dict)
    elapsed_seconds: float = 0.0

    def __post_init__(self) -> None:
        for name in ("validity_rate", "success_rate", "reward_auc"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class TrainResult:
    policy: PolicyValueNet
    reward: RewardNet
    reports: list[IterationReport]
    iterations_completed: int
    stopped_early: bool = False


@dataclass
class SelfPlayBatch:
    trajectories: list[PlanTrajectory]
    negatives: list[tuple[np.ndarray, np.ndarray]]

    @property
    def final_states(self) -> list[Any]:
        return [t.final_state for t in self.trajectories]


class OracleScorer:
    """Ground-truth goal score of a complete state."""

    def __init__(self, env: Any):
        self.env = env

    def __call__(self, state: Any) -> float:
        return float(self.env.oracle_score(state))


class LearnedScorer:
    """sigmoid of the reward model, so terminal rewards stay in [0, 1]."""

    def __init__(self, env: Any, reward: RewardNet):
        self.env = env
        self.reward = reward

    def __call__(self, state: Any) -> float:
        states, goals = self.env.reward_features(state)
        return float(self.reward.probability(states, goals))


@dataclass
class EpisodeJob:
    """Everything a worker process needs to play one episode."""
    env: Any
    policy: PolicyValueNet
    scorer: Any
    params: SearchParams
    state: Any
    seed_key: tuple[int, ...]
    sampled: bool = False


def _run_selfplay_episode(job: EpisodeJob) -> PlanTrajectory:
    rng = task_rng(*job.seed_key)
    evaluator = job.policy.evaluator(job.env)
    if job.sampled:
        return sample_episode(
            job.env, evaluator, job.scorer, job.state, rng,
            temperature=1.0, max_steps=job.params.max_depth, gamma=job.params.gamma,
        )
    search = GumbelSearch(job.env, evaluator, job.scorer, job.params)
    return run_episode(search, job.state, rng)


def initial_task_state(env: Any, task: Any, rng: np.random.Generator, use_prefix: bool = False) -> Any:
    if isinstance(task, TangramGoal):
        return env.initial_state(task, rng, use_prefix=use_prefix)
    return env.initial_state(task, rng)


def dataset_state(env: Any, task: Any) -> Any:
    """The solved configuration a dataset task stores."""
    if isinstance(task, RectConfig):
        state = env.initial_state(task)
        for placement in task.solution:
            state = env.step(state, encode_action(placement)).state
        return state
    if isinstance(task, TangramGoal):
        return source_state(task)
    raise DatasetError(f"unsupported task type {type(task).__name__}")


def demonstration(env: Any, config: RectConfig) -> PlanTrajectory:
    """Replay a stored rectangle solution as a one-hot imitation trajectory."""
    trajectory = PlanTrajectory()
    state = env.initial_state(config)
    for placement in config.solution:
        action = encode_action(placement)
        legal = env.legal_mask(state)
        policy = np.zeros(env.num_actions)
        policy[action] = 1.0
        outcome = env.step(state, action)
        reward = outcome.reward
        if outcome.done and env.is_complete(outcome.state):
            reward += env.oracle_score(outcome.state)
        trajectory.steps.append(
            PlanStep(env.digest(state), env.features(state), legal, action, policy, reward, 0.0)
        )
        state = outcome.state
    trajectory.final_state = state
    trajectory.complete = True
    return trajectory


def _mean_parts(parts: Sequence[dict[str, float]]) -> dict[str, float]:
    if not parts:
        return {}
    return {key: float(np.mean([p[key] for p in parts])) for key in parts[0]}


class AdversarialTrainer:
    """Self-play, policy improvement and reward refinement on one environment.

    Args:
        config: loop settings
        env: environment adapter shared by search and the networks
        train_tasks: dataset tasks (rectangle configs or tangram goals), the positives
        val_tasks: held-out tasks for retrieval accuracy and AUC; the train tasks stand in when absent
        run_dir: where checkpoints, reports and trajectories go; nothing is written when None
        jobs: worker processes for self-play episodes
    """

    def __init__(
        self,
        config: TrainingConfig,
        env: Any,
        train_tasks: Sequence[Any],
        val_tasks: Optional[Sequence[Any]] = None,
        run_dir: Optional[Path] = None,
        jobs: int = 1,
    ):
        if not train_tasks:
            raise DatasetError("training needs a non-empty dataset")
        self.config = config
        self.env = env
        self.train_tasks = list(train_tasks)
        self.val_tasks = list(val_tasks) if val_tasks else []
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.jobs = max(1, int(jobs))
        self.logger = logging.getLogger(__name__)

        seed = config.seed
        self.policy = PolicyValueNet.init(
            env.feature_dim, env.num_actions, task_rng(seed, STREAM_INIT, 0), hidden=config.policy_hidden
        )
        self.reward = RewardNet.init(
            env.reward_state_dim, env.goal_dim, task_rng(seed, STREAM_INIT, 1),
            hidden=config.reward_hidden, embed=config.reward_embed,
        )
        self.negatives: deque[tuple[np.ndarray, np.ndarray]] = deque(maxlen=config.negative_capacity)
        self.history: list[float] = []
        self.reports: list[IterationReport] = []
        self.iteration = 0
        self.steps_done = 0

        self.positives = self.positive_pairs(self.train_tasks)
        self.held_out = self.positive_pairs(self.val_tasks) if self.val_tasks else self.positives

    # -- data -------------------------------------------------------------

    def positive_pairs(self, tasks: Sequence[Any]) -> PairBatch:
        return stack_pairs([self.env.reward_features(dataset_state(self.env, task)) for task in tasks])

    def scorer(self) -> Any:
        if self.config.reward_source is RewardSource.ORACLE:
            return OracleScorer(self.env)
        return LearnedScorer(self.env, self.reward)

    # -- reward pretraining -------------------------------------------------

    def pretrain_reward(self) -> float:
        """Contrastive pretraining until validation retrieval accuracy stops improving.

        Returns:
            best retrieval accuracy; the parameters that reached it are kept
        """
        cfg = self.config
        pairs, held_out = self.positives, self.held_out
        if len(pairs) < 2:
            raise DatasetError("reward pretraining needs at least two dataset pairs")
        rng = task_rng(cfg.seed, STREAM_PRETRAIN)
        eval_rng_seed = (cfg.seed, STREAM_PRETRAIN, 1)
        best = retrieval_accuracy(self.reward, held_out, task_rng(*eval_rng_seed), cfg.retrieval_candidates)
        best_net = self._snapshot_reward()
        self.logger.info(f"Reward pretraining: initial retrieval accuracy {best:.3f}")
        stale = 0
        batch = min(cfg.reward_batch, len(pairs))
        for step in range(1, cfg.pretrain_steps + 1):
            idx = rng.choice(len(pairs), size=batch, replace=False)
            self.reward, loss = contrastive_update(self.reward, pairs.subset(idx), cfg.reward_lr, cfg.temperature)
            if step % cfg.eval_every:
                continue
            accuracy = retrieval_accuracy(self.reward, held_out, task_rng(*eval_rng_seed), cfg.retrieval_candidates)
            self.logger.debug(f"Pretrain step {step}: loss {loss:.4f}, retrieval {accuracy:.3f}")
            if accuracy > best:
                best, best_net, stale = accuracy, self._snapshot_reward(), 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    self.logger.info(f"Retrieval accuracy plateaued after {step} steps")
                    break
        self.reward = best_net
        self.logger.info(f"Reward pretraining done: retrieval accuracy {best:.3f}")
        return best

    def _snapshot_reward(self) -> RewardNet:
        adam = decode_adam(encode_adam(self.reward.adam))
        return RewardNet({k: v.copy() for k, v in self.reward.params.items()}, adam)

    def behaviour_clone(self) -> dict[str, float]:
        """Imitate stored rectangle solutions before self-play."""
        cfg = self.config
        demos = [demonstration(self.env, task) for task in self.train_tasks if isinstance(task, RectConfig)]
        if not demos or cfg.bc_epochs == 0:
            return {}
        batch = plan_batch(demos)
        rng = task_rng(cfg.seed, STREAM_UPDATE, 0)
        parts = []
        for _ in range(cfg.bc_epochs):
            for idx in minibatches(len(batch), cfg.batch_size, rng):
                self.policy, info = policy_value_update(self.policy, batch.subset(idx), cfg.policy_lr)
                parts.append(info)
        summary = _mean_parts(parts)
        self.logger.info(f"Behaviour cloning on {len(demos)} solutions: loss {summary.get('loss', 0.0):.4f}")
        return summary

    # -- self-play ----------------------------------------------------------

    def selfplay_generate(self, n: int, iteration: int) -> SelfPlayBatch:
        """Play ``n`` episodes from goals sampled out of the training set.

        Every terminal state becomes a negative paired with its own goal.
        """
        cfg = self.config
        task_stream = task_rng(cfg.seed, STREAM_TASKS, iteration)
        picks = task_stream.integers(len(self.train_tasks), size=n)
        scorer = self.scorer()
        sampled = cfg.operator is ImprovementOperator.PPO
        jobs = []
        for episode, pick in enumerate(picks):
            start_rng = task_rng(cfg.seed, STREAM_TASKS, iteration, episode)
            state = initial_task_state(self.env, self.train_tasks[int(pick)], start_rng, cfg.use_prefix)
            jobs.append(EpisodeJob(
                env=self.env,
                policy=self.policy,
                scorer=scorer,
                params=cfg.search,
                state=state,
                seed_key=(cfg.seed, STREAM_EPISODE, iteration, episode),
                sampled=sampled,
            ))
        trajectories = self._map_episodes(jobs)
        negatives = [self.env.reward_features(t.final_state) for t in trajectories]
        return SelfPlayBatch(trajectories, negatives)

    def _map_episodes(self, jobs: list[EpisodeJob]) -> list[PlanTrajectory]:
        if self.jobs > 1 and len(jobs) > 1:
            # map keeps submission order, so results do not depend on scheduling.
            with ProcessPoolExecutor(max_workers=min(self.jobs, len(jobs))) as executor:
                return list(executor.map(_run_selfplay_episode, jobs))
        return [_run_selfplay_episode(job) for job in jobs]

    # -- updates ------------------------------------------------------------

    def improve_policy(self, trajectories: Sequence[PlanTrajectory], iteration: int) -> dict[str, float]:
        cfg = self.config
        if not any(t.steps for t in trajectories):
            self.logger.warning(f"Iteration {iteration}: no planning steps, policy left unchanged")
            return {}
        batch = plan_batch(trajectories)
        rng = task_rng(cfg.seed, STREAM_UPDATE, iteration)
        if cfg.operator is ImprovementOperator.PPO:
            return self._ppo_epochs(batch, rng)
        parts = []
        for _ in range(cfg.policy_epochs):
            for idx in minibatches(len(batch), cfg.batch_size, rng):
                self.policy, info = policy_value_update(self.policy, batch.subset(idx), cfg.policy_lr)
                parts.append(info)
        # policy_ce cannot drop below the entropy of the search targets.
        return {**_mean_parts(parts), "policy_ce_floor": target_entropy(batch)}

    def _ppo_epochs(self, batch: TrainBatch, rng: np.random.Generator) -> dict[str, float]:
        cfg = self.config
        old_log_probs, values = rollout_log_probs(self.policy, batch)
        batch.old_log_probs = old_log_probs
        batch.advantages = batch.returns - values
        parts = []
        for _ in range(cfg.policy_epochs):
            for idx in minibatches(len(batch), cfg.batch_size, rng):
                self.policy, info = ppo_update(self.policy, batch.subset(idx), cfg.policy_lr, cfg.ppo_clip)
                parts.append(info)
        return _mean_parts(parts)

    def refine_reward(self, iteration: int) -> dict[str, float]:
        """One small step on balanced positives and buffered negatives."""
        cfg = self.config
        if not cfg.use_adversarial or not self.negatives:
            return {}
        rng = task_rng(cfg.seed, STREAM_UPDATE, iteration, 1)
        size = min(cfg.reward_batch, len(self.positives), len(self.negatives))
        pos = self.positives.subset(rng.choice(len(self.positives), size=size, replace=False))
        neg_idx = rng.choice(len(self.negatives), size=size, replace=False)
        neg = stack_pairs([self.negatives[int(i)] for i in neg_idx])
        self.reward, info = reward_update(
            self.reward, pos, neg, pairs=pos, lam=cfg.lam, lr=cfg.reward_lr, temperature=cfg.temperature
        )
        return {f"reward_{k}": v for k, v in info.items()}

    def reward_auc(self, negatives: Sequence[tuple[np.ndarray, np.ndarray]]) -> Optional[float]:
        """AUC of held-out positives against fresh negatives under the current reward model."""
        if not negatives or len(self.held_out) == 0:
            return None
        fresh = stack_pairs(list(negatives))
        pos_scores = self.reward.score(self.held_out.states, self.held_out.goals)
        neg_scores = self.reward.score(fresh.states, fresh.goals)
        return auc(np.atleast_1d(pos_scores), np.atleast_1d(neg_scores))

    # -- loop ---------------------------------------------------------------

    def run_iteration(self, iteration: int) -> IterationReport:
        cfg = self.config
        start = time.perf_counter()
        batch = self.selfplay_generate(cfg.episodes_per_iteration, iteration)
        trajectories = batch.trajectories
        finals = batch.final_states

        reward_auc = self.reward_auc(batch.negatives)
        losses = self.improve_policy(trajectories, iteration)
        self.negatives.extend(batch.negatives)
        losses.update(self.refine_reward(iteration))

        self.steps_done += len(trajectories)
        mean_reward = float(np.mean([t.terminal_reward for t in trajectories]))
        report = IterationReport(
            iteration=iteration,
            step=self.steps_done,
            mean_terminal_reward=mean_reward,
            validity_rate=validity_rate(self.env, finals),
            success_rate=success_rate(self.env, finals) if self.env.name == "rect" else None,
            reward_auc=reward_auc,
            dead_ends=sum(t.dead_end for t in trajectories),
            negatives=len(self.negatives),
            losses=losses,
            elapsed_seconds=time.perf_counter() - start,
        )
        if self.run_dir is not None:
            write_trajectories(
                trajectories,
                self.run_dir / "trajectories" / f"{iteration:03d}.jsonl",
                episode_offset=(iteration - 1) * cfg.episodes_per_iteration,
                extra={"iteration": iteration},
            )
        return report

    def plateaued(self) -> bool:
        cfg = self.config
        if len(self.history) <= cfg.plateau_window:
            return False
        return self.history[-1] - self.history[-1 - cfg.plateau_window] < cfg.plateau_delta

    def prepare(self) -> None:
        """Reward pretraining and optional behaviour cloning, checkpointed as iteration 0."""
        if self.config.pretrain_reward:
            self.pretrain_reward()
        else:
            self.logger.info("Reward pretraining skipped")
        self.behaviour_clone()
        self.save(0)

    def train(self, resume: bool = False) -> TrainResult:
        """Run the loop until the iteration budget or a reward plateau.

        Raises:
            NumericAbort: a non-finite loss; the last written checkpoint is left intact
        """
        cfg = self.config
        resumed = resume and self.resume()
        if not resumed:
            self.prepare()
        stopped_early = False
        for iteration in range(self.iteration + 1, cfg.iterations + 1):
            try:
                report = self.run_iteration(iteration)
            except NumericAbort:
                self.logger.error(f"Iteration {iteration} aborted", exc_info=True)
                raise
            self.iteration = iteration
            self.history.append(report.mean_terminal_reward)
            self.reports.append(report)
            self._append_report(report)
            self.save(iteration)
            self.logger.info(
                f"Iteration {iteration}/{cfg.iterations}: terminal reward {report.mean_terminal_reward:.3f}, "
                f"valid {report.validity_rate:.2f}, negatives {report.negatives}"
            )
            if self.plateaued():
                self.logger.warning(
                    f"Terminal reward improved less than {cfg.plateau_delta} over "
                    f"{cfg.plateau_window} iterations; stopping"
                )
                stopped_early = True
                break
        return TrainResult(self.policy, self.reward, self.reports, self.iteration, stopped_early)

    def _append_report(self, report: IterationReport) -> None:
        if self.run_dir is None:
            return
        path = self.run_dir / "reports.jsonl"
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(report.to_dict()) + "\n")
        except OSError as e:
            raise DataError(f"Cannot append to {path}: {e}") from e

    # -- persistence ----------------------------------------------------------

    def env_identity(self) -> dict[str, Any]:
        identity = {
            "name": self.env.name,
            "feature_dim": int(self.env.feature_dim),
            "num_actions": int(self.env.num_actions),
        }
        table = getattr(self.env, "table", None)
        if table is not None:
            identity["action_table"] = table.digest()
        return identity

    def checkpoint_body(self) -> dict[str, Any]:
        negatives = None
        if self.negatives:
            stacked = stack_pairs(list(self.negatives))
            negatives = {"states": encode_tensor(stacked.states), "goals": encode_tensor(stacked.goals)}
        return {
            "iteration": self.iteration,
            "steps_done": self.steps_done,
            "env": self.env_identity(),
            "policy": {"params": encode_params(self.policy.params), "adam": encode_adam(self.policy.adam)},
            "reward": {"params": encode_params(self.reward.params), "adam": encode_adam(self.reward.adam)},
            "negatives": negatives,
            "history": list(self.history),
        }

    def save(self, iteration: int) -> Optional[Path]:
        self.iteration = iteration
        if self.run_dir is None:
            return None
        return save_checkpoint(self.run_dir / "checkpoints" / f"{iteration:03d}.json", self.checkpoint_body())

    def load(self, path: Path) -> None:
        """Restore networks, optimizer moments, negatives and the loop counters."""
        body = load_checkpoint(path)
        if body.get("env") != self.env_identity():
            raise DataError(f"checkpoint {path} was written for {body.get('env')}, not {self.env_identity()}")
        self.policy = PolicyValueNet(decode_params(body["policy"]["params"]), decode_adam(body["policy"]["adam"]))
        self.reward = RewardNet(decode_params(body["reward"]["params"]), decode_adam(body["reward"]["adam"]))
        self.negatives = deque(maxlen=self.config.negative_capacity)
        if body.get("negatives") is not None:
            states = decode_tensor(body["negatives"]["states"])
            goals = decode_tensor(body["negatives"]["goals"])
            self.negatives.extend(zip(states, goals))
        self.history = [float(v) for v in body.get("history", [])]
        self.iteration = int(body["iteration"])
        self.steps_done = int(body.get("steps_done", 0))
        self.logger.info(f"Loaded checkpoint {path} (iteration {self.iteration})")

    def resume(self) -> bool:
        """Load the newest valid checkpoint in the run directory, if any."""
        if self.run_dir is None:
            return False
        latest = latest_checkpoint(self.run_dir / "checkpoints")
        if latest is None:
            self.logger.warning(f"No valid checkpoint under {self.run_dir}; starting fresh")
            return False
        self.load(latest)
        return True


def load_policy(path: Path, env: Any) -> PolicyValueNet:
    """Policy network from a training checkpoint, checked against ``env``."""
    body = load_checkpoint(path)
    net = PolicyValueNet(decode_params(body["policy"]["params"]), decode_adam(body["policy"]["adam"]))
    net.evaluator(env)
    return net


def load_reward(path: Path) -> RewardNet:
    body = load_checkpoint(path)
    return RewardNet(decode_params(body["reward"]["params"]), decode_adam(body["reward"]["adam"]))
