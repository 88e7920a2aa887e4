"""Sign-PGD attack loop under an L-inf ball and a query budget.

Each iteration spends one prediction query on the stop check, then (for the
two-query estimators) two queries on gradient estimation, updates the
running estimate g, steps the video by -h * sign(g) and projects it back
into the kappa-ball intersected with [0, 1]. The loop exits on
misclassification (or target hit), budget exhaustion, or the iteration cap.
No query is ever issued that would push the count past the budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import losses
from .estimator import (
    ESTIMATOR_KINDS,
    EstimatorState,
    grad_est,
    nes_estimate,
    update_g,
)
from .oracle import Oracle, OracleTransportError
from .sampler import LOOKUP_MODES, SAMPLER_KINDS, build_prior_source
from .tensor import clip_to_ball, linf_dist, sign, validate_video

MODES = ("untargeted", "targeted")


class CleanPredictionError(ValueError):
    """The clean video does not satisfy the attack precondition."""

    def __init__(self, message: str, queries_used: int = 1):
        super().__init__(message)
        self.queries_used = queries_used


@dataclass
class AttackConfig:
    """All attack hyperparameters.

    Untargeted defaults follow the standard setting (kappa=0.03, budget
    60000, 20000 iterations); ``AttackConfig.targeted(...)`` swaps in the
    targeted budgets (kappa=0.05, 200000 queries, 66667 iterations).
    """

    kappa: float = 0.03
    budget: int = 60000
    max_iters: int = 20000
    delta: float = 0.1
    eps: float = 0.1
    eta: float = 0.1
    h: float = 0.025
    refresh_every: int = 10          # iterations between motion-stack refreshes
    interval_length: int = 12        # frames per motion interval
    loss: str = "logits"
    sampler: str = "me_mv"
    estimator: str = "me_sampler"
    mode: str = "untargeted"
    target: int | None = None
    lookup_mode: str = "auto"
    seed: int = 0
    block_size: int = 16
    search_radius: int = 7
    flow_alpha: float = 1.0
    flow_iterations: int = 100
    nes_sigma: float = 0.01
    nes_samples: int = 10

    @classmethod
    def targeted(cls, target: int, **overrides) -> "AttackConfig":
        base = dict(
            kappa=0.05,
            budget=200000,
            max_iters=66667,
            mode="targeted",
            target=target,
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict) -> "AttackConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        positive = {
            "kappa": self.kappa, "budget": self.budget, "delta": self.delta,
            "eps": self.eps, "eta": self.eta, "h": self.h,
            "max_iters": self.max_iters,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if self.refresh_every < 1:
            raise ValueError(f"refresh_every must be >= 1, got {self.refresh_every}")
        if self.interval_length < 2:
            raise ValueError(
                f"interval_length must be >= 2, got {self.interval_length}"
            )
        if self.loss not in losses.LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.sampler not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.estimator not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lookup_mode not in LOOKUP_MODES:
            raise ValueError(f"unknown lookup_mode {self.lookup_mode!r}")
        if self.mode == "targeted" and self.target is None:
            raise ValueError("targeted mode needs a target label")


@dataclass
class AttackResult:
    """Outcome of one attack run.

    ``queries_used`` is what was actually consumed; ``metric_queries`` is
    what enters ANQ (the full budget when the attack failed).
    """

    success: bool
    queries_used: int
    metric_queries: int
    iterations: int
    adversarial: np.ndarray
    final_label: int
    loss_trace: list = field(default_factory=list)
    linf: float = 0.0


def stop_condition(pred: int, label: int, mode: str, target: int | None = None) -> bool:
    """True when the attack goal is reached for the given prediction."""
    if mode == "untargeted":
        return pred != label
    if mode == "targeted":
        return pred == target
    raise ValueError(f"unknown mode {mode!r}")


def step_video(x_prev, g, h: float, x0, kappa: float) -> np.ndarray:
    """One signed descent step followed by projection onto the kappa-ball."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != x_prev.shape:
        raise ValueError(f"g shape {g.shape} does not match video {x_prev.shape}")
    return clip_to_ball(x_prev - h * sign(g), x0, kappa)


def run_attack(video, label: int, oracle: Oracle, cfg: AttackConfig) -> AttackResult:
    """Full attack on one video. Deterministic given (inputs, config, seed)."""
    cfg.validate()
    x0 = validate_video(video)
    if not (0 <= label < oracle.num_classes):
        raise ValueError(
            f"label {label} out of range for {oracle.num_classes} classes"
        )
    if cfg.mode == "targeted":
        if not (0 <= cfg.target < oracle.num_classes):
            raise ValueError(
                f"target {cfg.target} out of range for {oracle.num_classes} classes"
            )
        if cfg.target == label:
            raise ValueError("target label must differ from the true label")

    rng = np.random.default_rng(cfg.seed)
    loss_fn = losses.get_loss_fn(cfg.loss, cfg.mode, cfg.target)

    source = None
    if cfg.estimator != "nes":
        prior_kind = "multi_noise" if cfg.estimator == "bandits_plain" else cfg.sampler
        source = build_prior_source(
            prior_kind,
            x0,
            rng,
            interval_length=cfg.interval_length,
            lookup_mode=cfg.lookup_mode,
            block_size=cfg.block_size,
            search_radius=cfg.search_radius,
            flow_alpha=cfg.flow_alpha,
            flow_iterations=cfg.flow_iterations,
        )
        est_cost = 2
    else:
        est_cost = cfg.nes_samples

    state = EstimatorState(
        g=np.zeros_like(x0), refresh_every=cfg.refresh_every
    )
    x = x0.copy()
    lo = x0 - cfg.kappa  # fixed projection bounds for the whole run
    hi = x0 + cfg.kappa
    queries = 0
    iterations = 0
    trace: list = []
    success = False
    final_label = label
    base_count = oracle.query_count

    try:
        while True:
            if queries + 1 > cfg.budget:
                break
            logits = oracle.query(x)
            queries += 1
            pred = int(np.argmax(logits))
            final_label = pred
            trace.append((iterations, float(loss_fn(logits, label))))
            if stop_condition(pred, label, cfg.mode, cfg.target):
                if iterations == 0:
                    if cfg.mode == "untargeted":
                        raise CleanPredictionError(
                            "already misclassified: clean video predicted "
                            f"{pred}, expected {label}",
                            queries_used=queries,
                        )
                    raise CleanPredictionError(
                        f"clean video already predicted as target {pred}",
                        queries_used=queries,
                    )
                success = True
                break
            if iterations >= cfg.max_iters:
                break
            if queries + est_cost > cfg.budget:
                break
            if cfg.estimator == "nes":
                est = nes_estimate(
                    x, label, oracle, loss_fn,
                    sigma=cfg.nes_sigma, n_samples=cfg.nes_samples, rng=rng,
                )
                queries += est.queries_used
                # NES estimates the loss gradient directly; no averaging in g
                state.g = est.delta
                state.loop += 1
            else:
                est = grad_est(
                    x, label, state, oracle, loss_fn, source,
                    delta=cfg.delta, eps=cfg.eps, rng=rng,
                )
                queries += est.queries_used
                update_g(state, est.delta, cfg.eta)
            # step_video with the per-run bounds hoisted out of the loop
            x = x - cfg.h * sign(state.g)
            np.clip(x, lo, hi, out=x)
            np.clip(x, 0.0, 1.0, out=x)
            iterations += 1
    except OracleTransportError as exc:
        exc.queries_consumed = oracle.query_count - base_count
        raise

    return AttackResult(
        success=success,
        queries_used=queries,
        metric_queries=queries if success else cfg.budget,
        iterations=iterations,
        adversarial=x,
        final_label=final_label,
        loss_trace=trace,
        linf=linf_dist(x, x0),
    )
