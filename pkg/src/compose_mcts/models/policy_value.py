"""Shared-trunk policy/value network.

One tanh hidden layer feeds an action-logit head and a tanh value head.
Gradients are closed-form; ``policy_value_loss_and_grads`` is the single
source used by both the update and the gradient checks.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from ..lib.exceptions import DataError
from .features import TrainBatch, check_dim
from .layers import check_finite, masked_log_softmax, masked_softmax, tanh_backward
from .optim import AdamState, Params

VALUE_WEIGHT = 0.5
POLICY_LR = 5e-5


@dataclass
class PolicyValueNet:
    params: Params
    adam: AdamState = field(default_factory=AdamState)

    @classmethod
    def init(
        cls,
        input_dim: int,
        num_actions: int,
        rng: np.random.Generator,
        hidden: int = 256,
    ) -> "PolicyValueNet":
        return cls({
            "W1": rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(input_dim, hidden)),
            "b1": np.zeros(hidden),
            "Wp": rng.normal(0.0, 0.01, size=(hidden, num_actions)),
            "bp": np.zeros(num_actions),
            "Wv": rng.normal(0.0, 0.01, size=hidden),
            "bv": np.zeros(()),
        })

    @classmethod
    def zeros(cls, input_dim: int, num_actions: int, hidden: int = 256) -> "PolicyValueNet":
        return cls({
            "W1": np.zeros((input_dim, hidden)),
            "b1": np.zeros(hidden),
            "Wp": np.zeros((hidden, num_actions)),
            "bp": np.zeros(num_actions),
            "Wv": np.zeros(hidden),
            "bv": np.zeros(()),
        })

    @property
    def input_dim(self) -> int:
        return int(self.params["W1"].shape[0])

    @property
    def num_actions(self) -> int:
        return int(self.params["Wp"].shape[1])

    def forward(self, features: np.ndarray, legal: np.ndarray) -> tuple[np.ndarray, np.ndarray | float]:
        return policy_value_forward(self.params, features, legal)

    def evaluator(self, env: Any) -> Callable[[Any], tuple[np.ndarray, float]]:
        """State -> (masked logits, value) for search."""
        if env.feature_dim != self.input_dim or env.num_actions != self.num_actions:
            raise DataError(
                f"network ({self.input_dim} -> {self.num_actions}) does not match "
                f"environment {env.name} ({env.feature_dim} -> {env.num_actions})"
            )

        def evaluate(state: Any) -> tuple[np.ndarray, float]:
            logits, value = self.forward(env.features(state), env.legal_mask(state))
            return logits, float(value)

        return evaluate


def trunk_forward(params: Params, features: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    hidden = np.tanh(features @ params["W1"] + params["b1"])
    logits = hidden @ params["Wp"] + params["bp"]
    value = np.tanh(hidden @ params["Wv"] + params["bv"])
    return hidden, logits, value


def policy_value_forward(
    params: Params,
    features: np.ndarray,
    legal: np.ndarray,
) -> tuple[np.ndarray, np.ndarray | float]:
    """Masked logits (illegal = -inf) and value in [-1, 1]; accepts one row or a batch."""
    check_dim("features", features, params["W1"].shape[0])
    check_dim("legal mask", legal, params["Wp"].shape[1])
    _, logits, value = trunk_forward(params, features)
    masked = np.where(legal, logits, -np.inf)
    if features.ndim == 1:
        return masked, float(value)
    return masked, value


def backprop_trunk(
    params: Params,
    features: np.ndarray,
    hidden: np.ndarray,
    value: np.ndarray,
    grad_logits: np.ndarray,
    grad_value: np.ndarray,
) -> Params:
    grad_pre_v = tanh_backward(grad_value, value)
    grad_hidden = grad_logits @ params["Wp"].T + np.outer(grad_pre_v, params["Wv"])
    grad_pre_h = tanh_backward(grad_hidden, hidden)
    return {
        "W1": features.T @ grad_pre_h,
        "b1": grad_pre_h.sum(axis=0),
        "Wp": hidden.T @ grad_logits,
        "bp": grad_logits.sum(axis=0),
        "Wv": hidden.T @ grad_pre_v,
        "bv": np.asarray(grad_pre_v.sum()),
    }


def policy_value_loss_and_grads(params: Params, batch: TrainBatch) -> tuple[float, dict[str, float], Params]:
    """CE(logits, improved policy) + 0.5 * MSE(value, return), batch-averaged."""
    n = len(batch)
    if n == 0:
        raise DataError("empty training batch")
    hidden, logits, value = trunk_forward(params, batch.features)
    log_probs = masked_log_softmax(logits, batch.legal)
    cross_entropy = float(-(batch.policy_targets * log_probs).sum() / n)
    mse = float(((value - batch.returns) ** 2).mean())
    loss = cross_entropy + VALUE_WEIGHT * mse

    grad_logits = (masked_softmax(logits, batch.legal) - batch.policy_targets) / n
    grad_value = VALUE_WEIGHT * 2.0 * (value - batch.returns) / n
    grads = backprop_trunk(params, batch.features, hidden, value, grad_logits, grad_value)
    return loss, {"policy_ce": cross_entropy, "value_mse": mse}, grads


def policy_value_update(
    net: PolicyValueNet,
    batch: TrainBatch,
    lr: float = POLICY_LR,
) -> tuple[PolicyValueNet, dict[str, float]]:
    """One Adam step; a non-finite loss aborts before any parameter changes."""
    loss, parts, grads = policy_value_loss_and_grads(net.params, batch)
    check_finite("policy_value_update", loss, *grads.values())
    params = net.adam.step(net.params, grads, lr)
    return PolicyValueNet(params, net.adam), {"loss": loss, **parts}


def target_entropy(batch: TrainBatch) -> float:
    """Mean entropy of the policy targets; the floor of the achievable CE."""
    p = batch.policy_targets
    logs = np.log(np.where(p > 0, p, 1.0))
    return float(-(p * logs).sum() / len(batch))


def minibatches(n: int, size: int, rng: Optional[np.random.Generator]) -> list[np.ndarray]:
    order = rng.permutation(n) if rng is not None else np.arange(n)
    return [order[i: i + size] for i in range(0, n, size)]
