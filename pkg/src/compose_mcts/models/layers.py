"""Numpy building blocks with their closed-form backward passes."""

import numpy as np

from ..lib.exceptions import NumericAbort

NORM_EPS = 1e-8


def masked_log_softmax(logits: np.ndarray, legal: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax over legal entries; illegal entries are 0, not -inf."""
    masked = np.where(legal, logits, -np.inf)
    top = masked.max(axis=-1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    lse = top + np.log(np.exp(masked - top).sum(axis=-1, keepdims=True))
    return np.where(legal, logits - lse, 0.0)


def masked_softmax(logits: np.ndarray, legal: np.ndarray) -> np.ndarray:
    return np.where(legal, np.exp(masked_log_softmax(logits, legal)), 0.0)


def normalize(x: np.ndarray, eps: float = NORM_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise x / sqrt(|x|^2 + eps); returns (unit rows, norms)."""
    norms = np.sqrt((x * x).sum(axis=-1, keepdims=True) + eps)
    return x / norms, norms


def normalize_backward(grad_y: np.ndarray, y: np.ndarray, norms: np.ndarray) -> np.ndarray:
    return (grad_y - y * (y * grad_y).sum(axis=-1, keepdims=True)) / norms


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def tanh_backward(grad_out: np.ndarray, out: np.ndarray) -> np.ndarray:
    return grad_out * (1.0 - out * out)


def check_finite(step: str, *values: float | np.ndarray) -> None:
    for value in values:
        if not np.all(np.isfinite(value)):
            raise NumericAbort(step)
