"""Zeroth-order gradient estimation.

The core estimator spends exactly two queries per call: it perturbs the
running gradient estimate g by +/- delta times a noise prior, probes the
loss at both points, and converts the difference into an update direction
for g. An antithetic NES estimator is provided as the query-hungry
baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .motion import MotionStack
from .sampler import PriorSource
from .tensor import ShapeMismatchError

ESTIMATOR_KINDS = ("me_sampler", "bandits_plain", "nes")


@dataclass
class GradEstimate:
    """One estimation step: the direction for g and its query cost."""

    delta: np.ndarray
    prior: np.ndarray | None
    queries_used: int
    loss_w1: float
    loss_w2: float

    @property
    def loss_at_x(self) -> float:
        """Midpoint of the two perturbed losses; a free proxy for L(x, y)."""
        return 0.5 * (self.loss_w1 + self.loss_w2)


@dataclass
class EstimatorState:
    """Running gradient estimate, iteration counter and the current stack.

    The stack is refreshed exactly when ``loop`` is a multiple of
    ``refresh_every`` (so on the first call, then every refresh_every
    iterations).
    """

    g: np.ndarray
    loop: int = 0
    refresh_every: int = 10
    stack: MotionStack | None = field(default=None)


def grad_est(
    x,
    label: int,
    state: EstimatorState,
    oracle,
    loss_fn,
    prior_source: PriorSource,
    *,
    delta: float,
    eps: float,
    rng,
) -> GradEstimate:
    """Two-query antithetic estimate of the update direction for g.

    Probe points are clamped to [0, 1] before querying, since real oracles
    only accept valid pixels. Consumed queries are always visible on
    ``oracle.query_count`` even if a query raises mid-call.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    if state.g.shape != x.shape:
        raise ShapeMismatchError(f"g {state.g.shape} vs video {x.shape}")

    if prior_source.needs_stack and state.loop % state.refresh_every == 0:
        state.stack = prior_source.resample_stack(rng)
    prior = prior_source.draw(rng, state.stack)
    rs = prior.data

    # probe points x + eps*(g +/- delta*rs), built without the w temporaries
    base = x + eps * state.g
    pert = (eps * delta) * rs
    q1 = base + pert
    np.clip(q1, 0.0, 1.0, out=q1)
    q2 = base - pert
    np.clip(q2, 0.0, 1.0, out=q2)
    loss_w1 = float(loss_fn(oracle.query(q1), label))
    loss_w2 = float(loss_fn(oracle.query(q2), label))
    direction = ((loss_w2 - loss_w1) / (delta * eps)) * rs
    return GradEstimate(direction, rs, 2, loss_w1, loss_w2)


def update_g(state: EstimatorState, delta, eta: float) -> EstimatorState:
    """Gradient-descent step on g and advance the iteration counter."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != state.g.shape:
        raise ShapeMismatchError(f"update {delta.shape} vs g {state.g.shape}")
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    state.g = state.g - eta * delta
    state.loop += 1
    return state


def nes_estimate(
    x,
    label: int,
    oracle,
    loss_fn,
    *,
    sigma: float,
    n_samples: int,
    rng,
) -> GradEstimate:
    """Antithetic NES estimate of the loss gradient itself.

    n_samples queries total, evaluated in +u / -u pairs with per-frame
    independent Gaussian directions.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if n_samples < 2 or n_samples % 2 != 0:
        raise ValueError(f"n_samples must be even and >= 2, got {n_samples}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    plus_losses = []
    minus_losses = []
    for _ in range(n_samples // 2):
        u = rng.standard_normal(x.shape)
        lp = float(loss_fn(oracle.query(np.clip(x + sigma * u, 0.0, 1.0)), label))
        lm = float(loss_fn(oracle.query(np.clip(x - sigma * u, 0.0, 1.0)), label))
        grad += lp * u
        grad -= lm * u
        plus_losses.append(lp)
        minus_losses.append(lm)
    grad /= n_samples * sigma
    return GradEstimate(
        grad,
        None,
        n_samples,
        float(np.mean(plus_losses)),
        float(np.mean(minus_losses)),
    )
