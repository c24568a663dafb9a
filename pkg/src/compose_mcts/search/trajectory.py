"""Planning trajectories and their JSON-lines log."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from ..lib.exceptions import DataError


@dataclass
class PlanStep:
    state_digest: str
    features: np.ndarray
    legal: np.ndarray
    action: int
    policy: np.ndarray
    reward: float
    q_root: float

    @property
    def legal_count(self) -> int:
        return int(self.legal.sum())


@dataclass
class PlanTrajectory:
    steps: list[PlanStep] = field(default_factory=list)
    final_state: Any = None
    complete: bool = False
    dead_end: bool = False
    gamma: float = 1.0

    @property
    def rewards(self) -> np.ndarray:
        return np.array([s.reward for s in self.steps], dtype=np.float64)

    @property
    def terminal_reward(self) -> float:
        return self.steps[-1].reward if self.steps else 0.0

    @property
    def returns(self) -> np.ndarray:
        """return_t = r_t + gamma * return_{t+1}."""
        out = np.zeros(len(self.steps))
        running = 0.0
        for t in range(len(self.steps) - 1, -1, -1):
            running = self.steps[t].reward + self.gamma * running
            out[t] = running
        return out


def step_record(step: PlanStep, min_prob: float = 1e-4) -> dict[str, Any]:
    """One log line; the improved policy is stored sparsely."""
    support = np.flatnonzero(step.policy >= min_prob)
    return {
        "state_digest": step.state_digest,
        "legal_count": step.legal_count,
        "chosen": step.action,
        "improved_policy": {str(int(a)): round(float(step.policy[a]), 6) for a in support},
        "q_root": step.q_root,
        "reward": step.reward,
    }


def write_trajectories(
    trajectories: Iterable[PlanTrajectory],
    path: Path,
    episode_offset: int = 0,
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """JSON-lines dump, one record per step."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for episode, trajectory in enumerate(trajectories, start=episode_offset):
                for t, step in enumerate(trajectory.steps):
                    record = {"episode": episode, "t": t, **step_record(step), **(extra or {})}
                    handle.write(json.dumps(record) + "\n")
    except OSError as e:
        raise DataError(f"Cannot write trajectory log {path}: {e}") from e
    return path
