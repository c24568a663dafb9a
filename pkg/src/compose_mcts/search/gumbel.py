"""Gumbel MuZero planning over a known transition model.

Root actions are drawn with Gumbel-Top-k and narrowed by Sequential
Halving; every simulation descends the tree with the deterministic
non-root selection rule and backs returns up as running means.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Generic, Optional, Protocol, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..envs.base import CompositionEnv
from ..lib.exceptions import DeadEndError, SearchError
from .trajectory import PlanStep, PlanTrajectory

logger = logging.getLogger(__name__)

S = TypeVar("S")


class SearchParams(BaseModel):
    """Simulation budget and value-transform constants."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_simulations: int = Field(default=64, ge=1)
    num_sampled: int = Field(default=16, ge=1)
    gumbel_scale: float = Field(default=1.0, ge=0.0)
    c_visit: float = 50.0
    c_scale: float = 0.1
    gamma: float = Field(default=1.0, gt=0.0, le=1.0)
    eps_depth: float = Field(default=1e-3, gt=0.0, lt=1.0)
    max_depth: int = Field(default=12, ge=1)

    @model_validator(mode="after")
    def _budget_covers_samples(self) -> "SearchParams":
        if self.num_simulations < self.num_sampled:
            raise ValueError("num_simulations must be >= num_sampled")
        return self


class Evaluator(Protocol):
    """Policy/value provider: masked logits (-inf where illegal) and a value."""

    def __call__(self, state: Any) -> tuple[np.ndarray, float]: ...


Scorer = Callable[[Any], float]


def gumbel_topk(
    logits: np.ndarray,
    k: int,
    gumbel_scale: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``k`` distinct actions without replacement.

    Returns:
        (action ids ordered by perturbed logit, the scaled noise for every action)
    """
    logits = np.asarray(logits, dtype=np.float64)
    finite = int(np.isfinite(logits).sum())
    if k > finite:
        raise SearchError(f"cannot sample {k} actions from {finite} legal ones")
    uniform = rng.uniform(1e-10, 1.0 - 1e-10, size=logits.shape)
    noise = gumbel_scale * -np.log(-np.log(uniform))
    perturbed = np.where(np.isfinite(logits), logits + noise, -np.inf)
    # Stable sort keeps the lowest id first among ties.
    order = np.argsort(-perturbed, kind="stable")
    return order[:k], noise


def sigma_transform(q: np.ndarray | float, max_visits: int, params: SearchParams) -> np.ndarray | float:
    return (params.c_visit + max_visits) * params.c_scale * q


def halving_schedule(k: int, num_simulations: int) -> list[tuple[int, int]]:
    """``(survivors, visits per survivor)`` for each Sequential Halving phase."""
    schedule: list[tuple[int, int]] = []
    size = k
    while size > 1:
        schedule.append((size, max(1, int(num_simulations // (size * math.log2(k))))))
        size = math.ceil(size / 2)
    return schedule


def _softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - x.max())
    return z / z.sum()


@dataclass
class SearchNode(Generic[S]):
    state: S
    depth: int
    reward: float = 0.0
    done: bool = False
    legal: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None
    value: float = 0.0
    visits: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    children: dict[int, "SearchNode[S]"] = field(default_factory=dict)

    @property
    def expanded(self) -> bool:
        return self.legal is not None

    def slot(self, action: int) -> int:
        return int(np.searchsorted(self.legal, action))


@dataclass
class SearchStats:
    phase_sizes: list[int] = field(default_factory=list)
    phase_simulations: list[int] = field(default_factory=list)
    total_simulations: int = 0


@dataclass
class SearchResult:
    action: int
    root_value: float
    improved_policy: np.ndarray
    visit_counts: dict[int, int]
    q_values: dict[int, float]
    stats: SearchStats


class GumbelSearch(Generic[S]):
    """Planner bound to one environment, evaluator and terminal scorer."""

    def __init__(
        self,
        env: CompositionEnv[S],
        evaluator: Evaluator,
        scorer: Scorer,
        params: Optional[SearchParams] = None,
    ):
        self.env = env
        self.evaluator = evaluator
        self.scorer = scorer
        self.params = params or SearchParams()

    def expand(self, node: SearchNode[S]) -> float:
        logits, value = self.evaluator(node.state)
        legal = np.flatnonzero(np.isfinite(logits))
        node.legal = legal
        node.logits = np.asarray(logits, dtype=np.float64)[legal]
        node.value = float(value)
        node.visits = np.zeros(legal.size, dtype=np.int64)
        node.q = np.zeros(legal.size, dtype=np.float64)
        return node.value

    def child(self, node: SearchNode[S], action: int) -> SearchNode[S]:
        if action not in node.children:
            outcome = self.env.step(node.state, action)
            reward = outcome.reward
            if outcome.done and self.env.is_complete(outcome.state):
                reward += float(self.scorer(outcome.state))
            node.children[action] = SearchNode(outcome.state, node.depth + 1, reward, outcome.done)
        return node.children[action]

    def _cut_off(self, node: SearchNode[S]) -> bool:
        if node.done or node.depth >= self.params.max_depth:
            return True
        return self.params.gamma < 1.0 and self.params.gamma ** node.depth < self.params.eps_depth

    def select(self, node: SearchNode[S]) -> int:
        """Non-root rule: argmax of pi'(a) - N(a) / (1 + sum N)."""
        sigma = sigma_transform(node.q, int(node.visits.max()), self.params)
        improved = _softmax(node.logits + sigma)
        score = improved - node.visits / (1.0 + node.visits.sum())
        return int(node.legal[int(np.argmax(score))])

    def backup(self, node: SearchNode[S], action: int, ret: float) -> None:
        i = node.slot(action)
        node.visits[i] += 1
        node.q[i] += (ret - node.q[i]) / node.visits[i]

    def simulate(self, node: SearchNode[S]) -> float:
        if self._cut_off(node):
            return 0.0
        if not node.expanded:
            return self.expand(node)
        if node.legal.size == 0:
            return 0.0
        action = self.select(node)
        child = self.child(node, action)
        ret = child.reward + self.params.gamma * self.simulate(child)
        self.backup(node, action, ret)
        return ret

    def _simulate_root_action(self, root: SearchNode[S], action: int) -> float:
        child = self.child(root, action)
        return child.reward + self.params.gamma * self.simulate(child)

    def sequential_halving(
        self,
        state: S,
        rng: np.random.Generator,
        simulate_fn: Optional[Callable[[S, int], float]] = None,
    ) -> SearchResult:
        """Choose a root action.

        Args:
            state: root state; must have at least one legal action
            rng: source of the Gumbel noise
            simulate_fn: optional ``(state, action) -> return`` replacing tree
                simulations, used to plug in exact action values

        Raises:
            DeadEndError: the root has no legal action
        """
        params = self.params
        root: SearchNode[S] = SearchNode(state, depth=0)
        self.expand(root)
        stats = SearchStats()
        if root.legal.size == 0:
            raise DeadEndError("no legal action at the root")
        if root.legal.size == 1:
            only = int(root.legal[0])
            policy = np.zeros(self.env.num_actions)
            policy[only] = 1.0
            return SearchResult(only, root.value, policy, {only: 0}, {}, stats)

        full_logits = np.full(self.env.num_actions, -np.inf)
        full_logits[root.legal] = root.logits
        k = min(params.num_sampled, int(root.legal.size))
        survivors, noise = gumbel_topk(full_logits, k, params.gumbel_scale, rng)
        survivors = [int(a) for a in survivors]

        def run(action: int) -> float:
            if simulate_fn is not None:
                return float(simulate_fn(state, action))
            return self._simulate_root_action(root, action)

        schedule = halving_schedule(k, params.num_simulations)
        # All phases rank with the transform at the final top visit count.
        top_visits = sum(per_action for _, per_action in schedule)
        for size, per_action in schedule:
            stats.phase_sizes.append(size)
            stats.phase_simulations.append(per_action * size)
            for action in survivors:
                for _ in range(per_action):
                    self.backup(root, action, run(action))
                    stats.total_simulations += 1
            sigma = sigma_transform(root.q, top_visits, params)
            scored = [(noise[a] + full_logits[a] + sigma[root.slot(a)], a) for a in survivors]
            scored.sort(key=lambda item: (-item[0], item[1]))
            survivors = [a for _, a in scored[: math.ceil(size / 2)]]
        stats.phase_sizes.append(1)

        chosen = survivors[0]
        visited = root.visits > 0
        total = int(root.visits.sum())
        root_value = float((root.value + float(root.visits @ root.q)) / (1 + total))
        return SearchResult(
            action=chosen,
            root_value=root_value,
            improved_policy=self.improved_policy(root, chosen),
            visit_counts={int(a): int(n) for a, n in zip(root.legal[visited], root.visits[visited])},
            q_values={int(a): float(q) for a, q in zip(root.legal[visited], root.q[visited])},
            stats=stats,
        )

    def improved_policy(self, root: SearchNode[S], chosen: int) -> np.ndarray:
        """softmax(logits + sigma(completed q)) over legal root actions.

        Unvisited actions complete their q with the root value; with fewer than
        two visited actions the target is the chosen action one-hot.
        """
        policy = np.zeros(self.env.num_actions)
        visited = root.visits > 0
        if visited.sum() < 2:
            policy[chosen] = 1.0
            return policy
        completed = np.where(visited, root.q, root.value)
        sigma = sigma_transform(completed, int(root.visits.max()), self.params)
        policy[root.legal] = _softmax(root.logits + sigma)
        return policy


def run_episode(
    search: GumbelSearch[S],
    state: S,
    rng: np.random.Generator,
) -> PlanTrajectory:
    """Plan from ``state`` until the episode ends.

    The search's scorer decides the terminal reward (oracle or learned). A
    state with no legal action ends the episode as failed with reward 0.
    """
    env = search.env
    trajectory = PlanTrajectory(gamma=search.params.gamma)
    for _ in range(search.params.max_depth):
        legal = env.legal_mask(state)
        if not legal.any():
            trajectory.dead_end = True
            logger.debug(f"Dead end after {len(trajectory.steps)} steps")
            break
        features = env.features(state)
        result = search.sequential_halving(state, rng)
        outcome = env.step(state, result.action)
        reward = outcome.reward
        if outcome.done and env.is_complete(outcome.state):
            reward += float(search.scorer(outcome.state))
            trajectory.complete = True
        trajectory.steps.append(
            PlanStep(
                state_digest=env.digest(state),
                features=features,
                legal=legal,
                action=result.action,
                policy=result.improved_policy,
                reward=reward,
                q_root=result.root_value,
            )
        )
        state = outcome.state
        if outcome.done:
            break
    trajectory.final_state = state
    return trajectory
