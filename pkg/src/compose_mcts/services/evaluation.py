"""Frozen-policy evaluation and the baseline methods.

Every method plays the same instances from the same start states, so their
rows are paired comparisons. Composition rows report success by difficulty
plus validity; generation rows report feature-space distances to the
dataset configurations.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from ..envs.rect import RectConfig
from ..lib.config import EvalConfig
from ..lib.exceptions import DataError, UsageError
from ..lib.seeding import task_rng
from ..models.policy_value import PolicyValueNet
from ..search.gumbel import GumbelSearch, SearchParams, run_episode
from ..search.rollout import sample_episode, uniform_evaluator
from .export import ExportService
from .file_handler import FileHandler
from .guidance import GuidanceWeights, descent_sampler
from .metrics import (
    COMPOSITION_COLUMNS,
    GENERATION_COLUMNS,
    RasterPCA,
    cached_features,
    frechet_distance,
    precision_recall,
    report,
)
from .trainer import LearnedScorer, OracleScorer, dataset_state, initial_task_state, load_policy, load_reward

logger = logging.getLogger(__name__)

DEFAULT_K = 3


class EvalMethod(str, Enum):
    GREEDY = "greedy"
    SAMPLED = "sampled"
    SEARCH = "search"
    RANDOM = "random"
    GUIDANCE = "guidance"

    @property
    def needs_policy(self) -> bool:
        return self in (EvalMethod.GREEDY, EvalMethod.SAMPLED, EvalMethod.SEARCH)


STREAMS = {method: i + 1 for i, method in enumerate(EvalMethod)}


@dataclass
class GuidanceSettings:
    steps: int = 100
    step_size: float = 0.05
    scale: float = 1.0


@dataclass
class EpisodeRecord:
    """Outcome of one evaluated instance."""
    id: str
    method: str
    difficulty: Optional[str]
    success: bool
    valid: bool
    complete: bool
    terminal_reward: float
    final: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class MethodOutcome:
    method: str
    records: list[EpisodeRecord]
    final_states: list[Any]

    def rate(self, attribute: str, difficulty: Optional[str] = None) -> float:
        rows = [r for r in self.records if difficulty is None or r.difficulty == difficulty]
        if not rows:
            return float("nan")
        return float(np.mean([getattr(r, attribute) for r in rows]))


@dataclass
class EvalJob:
    method: EvalMethod
    env: Any
    policy: Optional[PolicyValueNet]
    scorer: Any
    params: SearchParams
    task: Any
    state: Any
    seed_key: tuple[int, ...]
    temperature: float = 1.0
    guidance: GuidanceSettings = field(default_factory=GuidanceSettings)


def _evaluate_episode(job: EvalJob) -> tuple[Any, float]:
    """Final state and terminal reward of one episode."""
    rng = task_rng(*job.seed_key)
    env = job.env
    if job.method is EvalMethod.GUIDANCE:
        result = descent_sampler(
            job.task, rng, GuidanceWeights(),
            steps=job.guidance.steps, step_size=job.guidance.step_size, scale=job.guidance.scale,
        )
        return result.state, float(result.success)
    if job.method is EvalMethod.RANDOM:
        evaluator = uniform_evaluator(env)
    else:
        evaluator = job.policy.evaluator(env)
    if job.method is EvalMethod.SEARCH:
        trajectory = run_episode(GumbelSearch(env, evaluator, job.scorer, job.params), job.state, rng)
    else:
        temperature = 0.0 if job.method is EvalMethod.GREEDY else job.temperature
        trajectory = sample_episode(
            env, evaluator, job.scorer, job.state, rng,
            temperature=temperature, max_steps=job.params.max_depth, gamma=job.params.gamma,
        )
    return trajectory.final_state, trajectory.terminal_reward


def task_id(task: Any) -> str:
    return task.signature if isinstance(task, RectConfig) else task.source_id


def run_method(
    method: EvalMethod,
    env: Any,
    tasks: Sequence[Any],
    policy: Optional[PolicyValueNet] = None,
    scorer: Any = None,
    params: Optional[SearchParams] = None,
    temperature: float = 1.0,
    seed: int = 0,
    jobs: int = 1,
    guidance: Optional[GuidanceSettings] = None,
    use_prefix: bool = False,
) -> MethodOutcome:
    """Evaluate one method over ``tasks``; start states depend only on the seed and instance."""
    method = EvalMethod(method)
    if method.needs_policy and policy is None:
        raise UsageError(f"method {method.value} needs a trained policy (--checkpoint)")
    if method is EvalMethod.GUIDANCE and env.name != "rect":
        raise UsageError("the guidance sampler is defined for rectangle composition only")
    params = params or SearchParams()
    scorer = scorer if scorer is not None else OracleScorer(env)
    evaluation_jobs = [
        EvalJob(
            method=method,
            env=env,
            policy=policy,
            scorer=scorer,
            params=params,
            task=task,
            state=initial_task_state(env, task, task_rng(seed, 0, i), use_prefix),
            seed_key=(seed, STREAMS[method], i),
            temperature=temperature,
            guidance=guidance or GuidanceSettings(),
        )
        for i, task in enumerate(tasks)
    ]
    if jobs > 1 and len(evaluation_jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(evaluation_jobs))) as executor:
            results = list(executor.map(_evaluate_episode, evaluation_jobs))
    else:
        results = [_evaluate_episode(job) for job in evaluation_jobs]

    records = []
    for task, (state, terminal) in zip(tasks, results):
        complete = bool(env.is_complete(state))
        records.append(EpisodeRecord(
            id=task_id(task),
            method=method.value,
            difficulty=task.difficulty.value if isinstance(task, RectConfig) else None,
            success=complete and env.oracle_score(state) >= 1.0,
            valid=bool(env.is_valid(state)),
            complete=complete,
            terminal_reward=float(terminal),
            final=env.describe(state),
        ))
    logger.info(
        f"{method.value}: success {100 * np.mean([r.success for r in records]):.1f}%, "
        f"valid {100 * np.mean([r.valid for r in records]):.1f}% over {len(records)} instances"
    )
    return MethodOutcome(method.value, records, [state for state, _ in results])


def composition_row(outcome: MethodOutcome, label: Optional[str] = None) -> dict[str, Any]:
    """Easy/Hard/Average success and validity, in percent."""
    return {
        "Method": label or outcome.method,
        "Easy": 100.0 * outcome.rate("success", "Easy"),
        "Hard": 100.0 * outcome.rate("success", "Hard"),
        "Average": 100.0 * outcome.rate("success"),
        "Valid": 100.0 * outcome.rate("valid"),
    }


def state_rasters(env: Any, states: Sequence[Any]) -> np.ndarray:
    return np.stack([env.reward_features(s)[0] for s in states])


def generation_row(
    outcome: MethodOutcome,
    env: Any,
    reference: np.ndarray,
    extractor: RasterPCA,
    cache_dir: Optional[Path] = None,
    label: Optional[str] = None,
) -> dict[str, Any]:
    """Fréchet distance, precision, recall and validity against the reference rasters."""
    generated = state_rasters(env, outcome.final_states)
    real = cached_features(cache_dir, extractor.extractor_id, reference, lambda: extractor.transform(reference))
    fake = extractor.transform(generated)
    k = min(DEFAULT_K, len(real) - 1)
    try:
        fid = frechet_distance(real, fake)
        precision, recall = precision_recall(real, fake, k)
    except DataError as e:
        logger.warning(f"{outcome.method}: generation metrics unavailable ({e})")
        fid, precision, recall = float("nan"), float("nan"), float("nan")
    return {
        "Method": label or outcome.method,
        "FID-like": fid,
        "Pre": precision,
        "Rec": recall,
        "Val%": 100.0 * outcome.rate("valid"),
    }


def run_evaluation(
    config: EvalConfig,
    methods: Sequence[str],
    out_dir: Path,
    jobs: int = 1,
) -> dict[str, pd.DataFrame]:
    """Evaluate ``methods`` on one split and write the report tables.

    Returns:
        report name -> table (``composition`` for rectangles, ``generation`` always)
    """
    handler = FileHandler(config.data, config.actions)
    env = handler.build_env(config.env, config.mask)
    tasks = handler.load_tasks(config.env, config.split)
    if config.limit is not None:
        tasks = tasks[: config.limit]

    policy, scorer = None, OracleScorer(env)
    if config.checkpoint is not None:
        policy = load_policy(config.checkpoint, env)
        if config.reward == "learned":
            scorer = LearnedScorer(env, load_reward(config.checkpoint))
    params = SearchParams(
        num_simulations=config.simulations,
        num_sampled=min(config.num_sampled, config.simulations),
        gumbel_scale=config.gumbel_scale,
    )
    guidance = GuidanceSettings(config.guidance_steps, config.guidance_step_size, config.guidance_scale)

    reference = state_rasters(env, [dataset_state(env, task) for task in tasks])
    extractor = RasterPCA().fit(reference)
    composition, generation = [], []
    for method in methods:
        outcome = run_method(
            EvalMethod(method), env, tasks, policy, scorer, params,
            temperature=config.temperature, seed=config.seed, jobs=jobs, guidance=guidance,
        )
        _write_records(outcome, out_dir)
        if env.name == "rect":
            composition.append(composition_row(outcome))
        generation.append(generation_row(outcome, env, reference, extractor, out_dir / "feature_cache"))

    tables = {"generation": report(generation, GENERATION_COLUMNS, out_dir, "generation")}
    if composition:
        tables["composition"] = report(composition, COMPOSITION_COLUMNS, out_dir, "composition")
    return tables


def _write_records(outcome: MethodOutcome, out_dir: Path) -> None:
    ExportService(out_dir).export_jsonl((r.to_dict() for r in outcome.records), f"episodes_{outcome.method}.jsonl")
