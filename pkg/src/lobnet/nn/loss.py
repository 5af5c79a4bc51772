"""Softmax classification head: probabilities, cross-entropy, gradient."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilised by max subtraction."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy over the batch.

    ``targets`` are class indices. Returns (loss, probabilities,
    gradient w.r.t. logits); the gradient is (p - onehot) / N.
    """
    n, k = logits.shape
    targets = np.asarray(targets)
    if targets.shape != (n,):
        raise ValidationError(f"targets shape {targets.shape} does not match batch {n}")
    if np.any((targets < 0) | (targets >= k)):
        raise ValidationError(f"target class out of range for {k} classes")
    probs = softmax(logits)
    picked = probs[np.arange(n), targets]
    loss = float(-np.log(np.maximum(picked, np.finfo(probs.dtype).tiny)).mean())
    grad = probs.copy()
    grad[np.arange(n), targets] -= 1.0
    grad /= n
    return loss, probs, grad
