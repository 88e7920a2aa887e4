"""Scalar attack objectives computed from black-box logits.

All losses are nonnegative and reach 0 exactly when the attack goal is met
(top-1 off the true label, or on the target for targeted mode).
"""

from __future__ import annotations

import numpy as np

LOSS_KINDS = ("logits", "probability", "cross_entropy")


def _check(logits, label: int) -> np.ndarray:
    l = np.asarray(logits, dtype=np.float64).ravel()
    if l.size < 2:
        raise ValueError(f"need at least 2 classes, got {l.size}")
    if not (0 <= label < l.size):
        raise ValueError(f"label {label} out of range for {l.size} classes")
    return l


def softmax(logits) -> np.ndarray:
    l = np.asarray(logits, dtype=np.float64).ravel()
    z = l - l.max()
    e = np.exp(z)
    return e / e.sum()


def logits_margin(logits, label: int) -> float:
    """Hinge margin of the true class over the best other class."""
    l = _check(logits, label)
    others = np.delete(l, label)
    return float(max(l[label] - others.max(), 0.0))


def probability_margin(logits, label: int) -> float:
    """Softmax variant: max(sum_k p_k - max_{k != label} p_k, 0).

    The sum term is kept as written even though probabilities sum to one,
    which makes the value equal 1 - max_{k != label} p_k.
    """
    l = _check(logits, label)
    p = softmax(l)
    others = np.delete(p, label)
    return float(max(p.sum() - others.max(), 0.0))


def cross_entropy(logits, label: int) -> float:
    """Negative log softmax probability of the label (max-subtracted)."""
    l = np.asarray(logits, dtype=np.float64).ravel()
    if not (0 <= label < l.size):
        raise ValueError(f"label {label} out of range for {l.size} classes")
    z = l - l.max()
    return float(np.log(np.exp(z).sum()) - z[label])


def targeted_margin(logits, target: int) -> float:
    """Hinge margin of the best non-target class over the target; 0 exactly
    when the target is top-1."""
    l = _check(logits, target)
    others = np.delete(l, target)
    return float(max(others.max() - l[target], 0.0))


def get_loss_fn(kind: str, mode: str = "untargeted", target: int | None = None):
    """Resolve the configured loss into a (logits, label) -> float callable.

    Targeted mode always scores distance-to-target, whatever ``kind`` says.
    """
    if mode == "targeted":
        if target is None:
            raise ValueError("targeted mode needs a target label")
        return lambda logits, label: targeted_margin(logits, target)
    if kind == "logits":
        return logits_margin
    if kind == "probability":
        return probability_margin
    if kind == "cross_entropy":
        return cross_entropy
    raise ValueError(f"unknown loss kind {kind!r}, expected one of {LOSS_KINDS}")
