"""Policy-only episodes: masked autoregressive sampling without search.

Used by the PPO operator and by the greedy, sampled and random baselines.
"""

import logging
from typing import Any, Callable

import numpy as np

from ..envs.base import CompositionEnv
from .trajectory import PlanStep, PlanTrajectory

logger = logging.getLogger(__name__)


def action_distribution(logits: np.ndarray, temperature: float) -> np.ndarray:
    """softmax(logits / t) over finite entries; t = 0 puts all mass on the lowest-id argmax."""
    logits = np.asarray(logits, dtype=np.float64)
    legal = np.isfinite(logits)
    probs = np.zeros_like(logits)
    if not legal.any():
        return probs
    if temperature == 0.0:
        best = np.where(legal, logits, -np.inf)
        probs[int(np.argmax(best))] = 1.0
        return probs
    scaled = np.where(legal, logits / temperature, -np.inf)
    z = np.exp(scaled - scaled[legal].max())
    return z / z.sum()


def uniform_evaluator(env: CompositionEnv) -> Callable[[Any], tuple[np.ndarray, float]]:
    """Zero logits on legal actions: the random baseline."""

    def evaluate(state: Any) -> tuple[np.ndarray, float]:
        return np.where(env.legal_mask(state), 0.0, -np.inf), 0.0

    return evaluate


def sample_episode(
    env: CompositionEnv,
    evaluator: Callable[[Any], tuple[np.ndarray, float]],
    scorer: Callable[[Any], float],
    state: Any,
    rng: np.random.Generator,
    temperature: float = 1.0,
    max_steps: int = 12,
    gamma: float = 1.0,
) -> PlanTrajectory:
    """Roll out the policy from ``state``.

    The recorded policy is the sampling distribution. Terminal rewards follow
    the same rule as planned episodes: geometry reward plus ``scorer`` on
    complete states.
    """
    trajectory = PlanTrajectory(gamma=gamma)
    for _ in range(max_steps):
        legal = env.legal_mask(state)
        if not legal.any():
            trajectory.dead_end = True
            break
        logits, value = evaluator(state)
        probs = action_distribution(logits, temperature)
        action = int(np.argmax(probs)) if temperature == 0.0 else int(rng.choice(probs.size, p=probs))
        outcome = env.step(state, action)
        reward = outcome.reward
        if outcome.done and env.is_complete(outcome.state):
            reward += float(scorer(outcome.state))
            trajectory.complete = True
        trajectory.steps.append(
            PlanStep(
                state_digest=env.digest(state),
                features=env.features(state),
                legal=legal,
                action=action,
                policy=probs,
                reward=reward,
                q_root=float(value),
            )
        )
        state = outcome.state
        if outcome.done:
            break
    trajectory.final_state = state
    return trajectory
