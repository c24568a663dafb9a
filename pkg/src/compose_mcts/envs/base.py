"""Interface shared by the composition environments.

Search, baselines and the trainer only talk to environments through this
protocol, so rectangle composition and tangram assembly are interchangeable.
"""

from dataclasses import dataclass
from typing import Any, Generic, Protocol, TypeVar

import numpy as np

S = TypeVar("S")


@dataclass(frozen=True)
class StepOutcome(Generic[S]):
    """Successor state plus the geometric reward of the transition."""

    state: S
    reward: float
    done: bool


class CompositionEnv(Protocol[S]):
    """Deterministic, side-effect free transition model with action masks."""

    name: str
    num_actions: int
    feature_dim: int
    reward_state_dim: int
    goal_dim: int

    def initial_state(self, task: Any, rng: np.random.Generator) -> S:
        """Start state for a dataset task (rectangle config or tangram goal)."""
        ...

    def legal_mask(self, state: S) -> np.ndarray: ...

    def step(self, state: S, action: int) -> StepOutcome[S]: ...

    def is_complete(self, state: S) -> bool:
        """Terminal and constraint-satisfying: eligible for a goal reward."""
        ...

    def oracle_score(self, state: S) -> float:
        """Ground-truth goal score in [0, 1] for a complete state."""
        ...

    def features(self, state: S) -> np.ndarray: ...

    def reward_features(self, state: S) -> tuple[np.ndarray, np.ndarray]:
        """(state features, goal features) consumed by the reward model."""
        ...

    def is_valid(self, state: S) -> bool:
        """No two placed pieces overlap."""
        ...

    def digest(self, state: S) -> str: ...

    def describe(self, state: S) -> dict[str, Any]: ...
