"""Policy/value and reward networks with closed-form gradients."""

from .features import PairBatch, TrainBatch, plan_batch
from .optim import AdamState
from .policy_value import PolicyValueNet, policy_value_forward, policy_value_update
from .ppo import ppo_update
from .reward import RewardNet, auc, loss_cont, loss_pref, retrieval_accuracy, reward_forward, reward_update

__all__ = [
    "PairBatch", "TrainBatch", "plan_batch", "AdamState",
    "PolicyValueNet", "policy_value_forward", "policy_value_update", "ppo_update",
    "RewardNet", "auc", "loss_cont", "loss_pref", "retrieval_accuracy", "reward_forward", "reward_update",
]
