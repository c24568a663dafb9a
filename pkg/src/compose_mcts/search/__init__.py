"""Gumbel MuZero planning with Sequential Halving, plus policy-only rollouts."""

from .gumbel import (
    Evaluator,
    GumbelSearch,
    SearchParams,
    SearchResult,
    SearchStats,
    gumbel_topk,
    halving_schedule,
    run_episode,
    sigma_transform,
)
from .rollout import action_distribution, sample_episode, uniform_evaluator
from .trajectory import PlanStep, PlanTrajectory, write_trajectories

__all__ = [
    "Evaluator", "GumbelSearch", "SearchParams", "SearchResult", "SearchStats",
    "gumbel_topk", "halving_schedule", "run_episode", "sigma_transform",
    "action_distribution", "sample_episode", "uniform_evaluator",
    "PlanStep", "PlanTrajectory", "write_trajectories",
]
