"""PPO improvement operator on the shared policy/value network."""

import numpy as np

from ..lib.exceptions import DataError
from .features import TrainBatch
from .layers import check_finite, masked_log_softmax
from .optim import Params
from .policy_value import POLICY_LR, PolicyValueNet, backprop_trunk, trunk_forward

CLIP = 0.2
VALUE_COEF = 0.5
ENTROPY_COEF = 0.01


def ppo_loss_and_grads(
    params: Params,
    batch: TrainBatch,
    clip: float = CLIP,
    value_coef: float = VALUE_COEF,
    entropy_coef: float = ENTROPY_COEF,
) -> tuple[float, dict[str, float], Params]:
    """Clipped surrogate + value MSE - entropy bonus, masked actions excluded.

    ``batch`` must carry the taken actions, their log-probabilities under the
    rollout policy and the advantages (return minus the rollout value).
    """
    if batch.actions is None or batch.old_log_probs is None or batch.advantages is None:
        raise DataError("PPO batch needs actions, old log-probabilities and advantages")
    n = len(batch)
    if n == 0:
        raise DataError("empty PPO batch")
    rows = np.arange(n)
    hidden, logits, value = trunk_forward(params, batch.features)
    log_probs = masked_log_softmax(logits, batch.legal)
    probs = np.where(batch.legal, np.exp(log_probs), 0.0)

    ratio = np.exp(log_probs[rows, batch.actions] - batch.old_log_probs)
    adv = batch.advantages
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv
    surrogate = float(np.minimum(unclipped, clipped).mean())
    entropy_rows = -(probs * log_probs).sum(axis=1)
    entropy = float(entropy_rows.mean())
    mse = float(((value - batch.returns) ** 2).mean())
    loss = -surrogate + value_coef * mse - entropy_coef * entropy

    one_hot = np.zeros_like(probs)
    one_hot[rows, batch.actions] = 1.0
    active = (unclipped <= clipped).astype(np.float64)
    grad_logits = -(active * adv * ratio)[:, None] * (one_hot - probs) / n
    # d(entropy)/dz_k = -p_k (log p_k + H)
    grad_logits += entropy_coef * probs * (log_probs + entropy_rows[:, None]) / n
    grad_logits = np.where(batch.legal, grad_logits, 0.0)
    grad_value = value_coef * 2.0 * (value - batch.returns) / n
    grads = backprop_trunk(params, batch.features, hidden, value, grad_logits, grad_value)
    return loss, {"surrogate": surrogate, "value_mse": mse, "entropy": entropy}, grads


def ppo_update(
    net: PolicyValueNet,
    batch: TrainBatch,
    lr: float = POLICY_LR,
    clip: float = CLIP,
) -> tuple[PolicyValueNet, dict[str, float]]:
    loss, parts, grads = ppo_loss_and_grads(net.params, batch, clip)
    check_finite("ppo_update", loss, *grads.values())
    return PolicyValueNet(net.adam.step(net.params, grads, lr), net.adam), {"loss": loss, **parts}


def rollout_log_probs(net: PolicyValueNet, batch: TrainBatch) -> tuple[np.ndarray, np.ndarray]:
    """Log-probabilities of the taken actions and values under ``net``."""
    if batch.actions is None:
        raise DataError("batch carries no actions")
    _, logits, value = trunk_forward(net.params, batch.features)
    log_probs = masked_log_softmax(logits, batch.legal)
    return log_probs[np.arange(len(batch)), batch.actions], value
