"""Training batches assembled from planning trajectories and dataset pairs."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..lib.exceptions import DataError
from ..search.trajectory import PlanTrajectory


@dataclass
class TrainBatch:
    """Imitation/PPO batch: one row per visited state."""

    features: np.ndarray
    legal: np.ndarray
    policy_targets: np.ndarray
    returns: np.ndarray
    actions: Optional[np.ndarray] = None
    old_log_probs: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def subset(self, index: np.ndarray) -> "TrainBatch":
        def pick(a: Optional[np.ndarray]) -> Optional[np.ndarray]:
            return None if a is None else a[index]

        return TrainBatch(
            self.features[index], self.legal[index], self.policy_targets[index], self.returns[index],
            pick(self.actions), pick(self.old_log_probs), pick(self.advantages),
        )


@dataclass
class PairBatch:
    """Reward-model rows: state features and the goal features they are paired with."""

    states: np.ndarray
    goals: np.ndarray

    def __len__(self) -> int:
        return int(self.states.shape[0])

    def subset(self, index: np.ndarray) -> "PairBatch":
        return PairBatch(self.states[index], self.goals[index])


def check_dim(name: str, array: np.ndarray, expected: int) -> None:
    if array.shape[-1] != expected:
        raise DataError(f"{name} has dimension {array.shape[-1]}, expected {expected}")


def plan_batch(trajectories: Sequence[PlanTrajectory]) -> TrainBatch:
    """Stack every step of every trajectory; value targets are Monte-Carlo returns."""
    steps = [(step, ret) for tr in trajectories for step, ret in zip(tr.steps, tr.returns)]
    if not steps:
        raise DataError("no planning steps to train on")
    legal = np.stack([s.legal for s, _ in steps])
    targets = np.stack([s.policy for s, _ in steps])
    targets = np.where(legal, targets, 0.0)
    targets /= targets.sum(axis=1, keepdims=True)
    return TrainBatch(
        features=np.stack([s.features for s, _ in steps]),
        legal=legal,
        policy_targets=targets,
        returns=np.array([r for _, r in steps], dtype=np.float64),
        actions=np.array([s.action for s, _ in steps], dtype=np.int64),
    )


def stack_pairs(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> PairBatch:
    if not pairs:
        raise DataError("no (state, goal) pairs")
    return PairBatch(np.stack([s for s, _ in pairs]), np.stack([g for _, g in pairs]))
