"""Goal-conditioned reward model.

A state encoder (tanh hidden layer then linear embedding) and a linear
goal encoder produce embeddings v and w; the score is a learnably scaled
cosine similarity. Trained with the pairwise preference loss on dataset
positives vs generated negatives plus a symmetric InfoNCE loss over
matched dataset pairs.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..lib.exceptions import DataError
from .features import PairBatch, check_dim
from .layers import NORM_EPS, check_finite, normalize, normalize_backward, sigmoid, softplus, tanh_backward
from .optim import AdamState, Params

TEMPERATURE = 0.07
REWARD_LR = 1e-4


@dataclass
class RewardNet:
    params: Params
    adam: AdamState = field(default_factory=AdamState)

    @classmethod
    def init(
        cls,
        state_dim: int,
        goal_dim: int,
        rng: np.random.Generator,
        hidden: int = 128,
        embed: int = 64,
        init_scale: float = 5.0,
    ) -> "RewardNet":
        return cls({
            "Ws1": rng.normal(0.0, 1.0 / np.sqrt(state_dim), size=(state_dim, hidden)),
            "bs1": np.zeros(hidden),
            "Ws2": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, embed)),
            "bs2": np.zeros(embed),
            "Wg": rng.normal(0.0, 1.0 / np.sqrt(goal_dim), size=(goal_dim, embed)),
            "bg": np.zeros(embed),
            "log_scale": np.asarray(np.log(init_scale)),
        })

    @classmethod
    def zeros(cls, state_dim: int, goal_dim: int, hidden: int = 128, embed: int = 64) -> "RewardNet":
        return cls({
            "Ws1": np.zeros((state_dim, hidden)),
            "bs1": np.zeros(hidden),
            "Ws2": np.zeros((hidden, embed)),
            "bs2": np.zeros(embed),
            "Wg": np.zeros((goal_dim, embed)),
            "bg": np.zeros(embed),
            "log_scale": np.zeros(()),
        })

    def score(self, states: np.ndarray, goals: np.ndarray) -> np.ndarray | float:
        r, _, _ = reward_forward(self.params, states, goals)
        return r

    def probability(self, states: np.ndarray, goals: np.ndarray) -> np.ndarray | float:
        """sigmoid(r), the learned terminal reward in [0, 1]."""
        return sigmoid(np.asarray(self.score(states, goals)))


@dataclass
class _Cache:
    states: np.ndarray
    goals: np.ndarray
    hidden: np.ndarray
    v: np.ndarray
    w: np.ndarray
    v_unit: np.ndarray
    v_norm: np.ndarray
    w_unit: np.ndarray
    w_norm: np.ndarray
    cos: np.ndarray
    scale: float


def _encode(params: Params, states: np.ndarray, goals: np.ndarray) -> _Cache:
    check_dim("state features", states, params["Ws1"].shape[0])
    check_dim("goal features", goals, params["Wg"].shape[0])
    states, goals = np.atleast_2d(states), np.atleast_2d(goals)
    hidden = np.tanh(states @ params["Ws1"] + params["bs1"])
    v = hidden @ params["Ws2"] + params["bs2"]
    w = goals @ params["Wg"] + params["bg"]
    v_unit, v_norm = normalize(v, NORM_EPS)
    w_unit, w_norm = normalize(w, NORM_EPS)
    cos = (v_unit * w_unit).sum(axis=1)
    return _Cache(states, goals, hidden, v, w, v_unit, v_norm, w_unit, w_norm, cos, float(np.exp(params["log_scale"])))


def reward_forward(
    params: Params,
    states: np.ndarray,
    goals: np.ndarray,
) -> tuple[np.ndarray | float, np.ndarray, np.ndarray]:
    """Score plus both embeddings; one row in gives a scalar score."""
    cache = _encode(params, states, goals)
    r = cache.scale * cache.cos
    if np.ndim(states) == 1:
        return float(r[0]), cache.v[0], cache.w[0]
    return r, cache.v, cache.w


def _backprop(params: Params, cache: _Cache, grad_v_unit: np.ndarray, grad_w_unit: np.ndarray) -> Params:
    grad_v = normalize_backward(grad_v_unit, cache.v_unit, cache.v_norm)
    grad_w = normalize_backward(grad_w_unit, cache.w_unit, cache.w_norm)
    grad_pre_h = tanh_backward(grad_v @ params["Ws2"].T, cache.hidden)
    return {
        "Ws1": cache.states.T @ grad_pre_h,
        "bs1": grad_pre_h.sum(axis=0),
        "Ws2": cache.hidden.T @ grad_v,
        "bs2": grad_v.sum(axis=0),
        "Wg": cache.goals.T @ grad_w,
        "bg": grad_w.sum(axis=0),
        "log_scale": np.zeros(()),
    }


def _add(a: Params, b: Params, weight: float = 1.0) -> Params:
    return {k: a[k] + weight * b[k] for k in a}


def loss_pref(params: Params, positives: PairBatch, negatives: PairBatch) -> tuple[float, Params]:
    """-mean log sigmoid(r+) - mean log(1 - sigmoid(r-))."""
    if len(positives) == 0 or len(negatives) == 0:
        raise DataError("preference loss needs positives and negatives")
    total = 0.0
    grads: Optional[Params] = None
    for batch, sign in ((positives, 1.0), (negatives, -1.0)):
        cache = _encode(params, batch.states, batch.goals)
        r = cache.scale * cache.cos
        n = len(batch)
        # -log sigmoid(r) = softplus(-r); -log(1 - sigmoid(r)) = softplus(r)
        total += float(softplus(-sign * r).sum() / n)
        grad_r = -sign * sigmoid(-sign * r) / n
        grad_cos = grad_r * cache.scale
        part = _backprop(
            params, cache,
            grad_cos[:, None] * cache.w_unit,
            grad_cos[:, None] * cache.v_unit,
        )
        part["log_scale"] = np.asarray((grad_r * r).sum())
        grads = part if grads is None else _add(grads, part)
    return total, grads


def _log_softmax(x: np.ndarray, axis: int) -> np.ndarray:
    top = x.max(axis=axis, keepdims=True)
    return x - top - np.log(np.exp(x - top).sum(axis=axis, keepdims=True))


def loss_cont(params: Params, pairs: PairBatch, temperature: float = TEMPERATURE) -> tuple[float, Params]:
    """Symmetric InfoNCE over the N x N matrix of unit-embedding similarities / T."""
    n = len(pairs)
    if n < 2:
        raise DataError("contrastive loss needs at least two pairs")
    cache = _encode(params, pairs.states, pairs.goals)
    sims = cache.v_unit @ cache.w_unit.T / temperature
    rows = _log_softmax(sims, axis=1)
    cols = _log_softmax(sims, axis=0)
    loss = float(-(np.trace(rows) + np.trace(cols)) / n)
    eye = np.eye(n)
    grad_sims = ((np.exp(rows) - eye) + (np.exp(cols) - eye)) / n
    grads = _backprop(
        params, cache,
        grad_sims @ cache.w_unit / temperature,
        grad_sims.T @ cache.v_unit / temperature,
    )
    return loss, grads


def reward_loss_and_grads(
    params: Params,
    positives: PairBatch,
    negatives: PairBatch,
    pairs: Optional[PairBatch],
    lam: float = 1.0,
    temperature: float = TEMPERATURE,
) -> tuple[float, dict[str, float], Params]:
    pref, grads = loss_pref(params, positives, negatives)
    parts = {"loss_pref": pref, "loss_cont": 0.0}
    total = pref
    if lam != 0.0 and pairs is not None and len(pairs) >= 2:
        cont, cont_grads = loss_cont(params, pairs, temperature)
        parts["loss_cont"] = cont
        total += lam * cont
        grads = _add(grads, cont_grads, lam)
    return total, parts, grads


def reward_update(
    net: RewardNet,
    positives: PairBatch,
    negatives: PairBatch,
    pairs: Optional[PairBatch] = None,
    lam: float = 1.0,
    lr: float = REWARD_LR,
    temperature: float = TEMPERATURE,
) -> tuple[RewardNet, dict[str, float]]:
    """One Adam step on L_pref + lam * L_cont."""
    loss, parts, grads = reward_loss_and_grads(net.params, positives, negatives, pairs, lam, temperature)
    check_finite("reward_update", loss, *grads.values())
    return RewardNet(net.adam.step(net.params, grads, lr), net.adam), {"loss": loss, **parts}


def contrastive_update(
    net: RewardNet,
    pairs: PairBatch,
    lr: float = REWARD_LR,
    temperature: float = TEMPERATURE,
) -> tuple[RewardNet, float]:
    loss, grads = loss_cont(net.params, pairs, temperature)
    check_finite("contrastive_update", loss, *grads.values())
    return RewardNet(net.adam.step(net.params, grads, lr), net.adam), loss


def retrieval_accuracy(
    net: RewardNet,
    pairs: PairBatch,
    rng: np.random.Generator,
    candidates: int = 20,
) -> float:
    """Fraction of states whose own goal scores highest among distinct candidate goals.

    Candidates are shuffled so ties resolve to a random position.
    """
    if len(pairs) == 0:
        raise DataError("retrieval accuracy needs at least one pair")
    unique, inverse = np.unique(pairs.goals, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    hits = 0
    for i in range(len(pairs)):
        others = np.delete(np.arange(unique.shape[0]), inverse[i])
        take = min(candidates - 1, others.size)
        chosen = np.concatenate([[inverse[i]], rng.choice(others, size=take, replace=False)])
        chosen = rng.permutation(chosen)
        states = np.repeat(pairs.states[i: i + 1], chosen.size, axis=0)
        scores = net.score(states, unique[chosen])
        hits += int(chosen[int(np.argmax(scores))] == inverse[i])
    return hits / len(pairs)


def auc(positive_scores: np.ndarray, negative_scores: np.ndarray) -> float:
    """Mann-Whitney AUC; ties count one half."""
    pos = np.asarray(positive_scores, dtype=np.float64).ravel()
    neg = np.asarray(negative_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise DataError("AUC needs positive and negative scores")
    greater = (pos[:, None] > neg[None, :]).mean()
    ties = (pos[:, None] == neg[None, :]).mean()
    return float(greater + 0.5 * ties)
