"""Noise priors for gradient estimation.

The motion-excited sampler turns raw Gaussian noise into a motion-aware
prior: each pixel of the output copies the noise value found at a coordinate
derived from the pixel's motion-map entry. Two coordinate interpretations
are supported:

* ``raw``       -- the map's two channel values, rounded and clamped, are the
  (row, col) to read. Pixels sharing a motion value share a noise value.
* ``traceback`` -- the map is a displacement; pixel (row, col) reads
  (row - v, col - u), i.e. the location its content came from.

``auto`` resolves to raw for handcrafted maps and traceback for estimated
(mv / flow) maps.

Baseline priors for ablations live here too: one shared noise frame, fully
independent per-frame noise, and the two handcrafted map constructions
(uniform values in [-50, 50] and row-major sequence values, both masked to
the nonzero support of a reference map).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .motion import MotionMap, MotionSet, MotionStack, build_motion_set, sample_motion_stack

LOOKUP_MODES = ("auto", "raw", "traceback")

SAMPLER_KINDS = ("me_mv", "me_of", "one_noise", "multi_noise", "u_sample", "s_value")


@dataclass(frozen=True)
class SparkedPrior:
    """Motion-shaped noise tensor plus how it was produced."""

    data: np.ndarray
    sampler: str = "me"
    stack_indices: tuple | None = None


def default_lookup_mode(kind: str) -> str:
    return "raw" if kind == "handcrafted" else "traceback"


def _round_half_up(x: np.ndarray) -> np.ndarray:
    # ties go toward +inf, unlike np.round's banker's rounding
    return np.floor(x + 0.5)


def to_lookup(mmap: MotionMap, mode: str = "auto") -> np.ndarray:
    """Resolve a motion map into integer (row, col) source coordinates,
    clamped to the frame. Returns an (H, W, 2) int array."""
    if mode not in LOOKUP_MODES:
        raise ValueError(f"lookup mode must be one of {LOOKUP_MODES}, got {mode!r}")
    vals = mmap.data
    if not np.all(np.isfinite(vals)):
        raise ValueError("motion map contains NaN or infinite values")
    if mode == "auto":
        mode = default_lookup_mode(mmap.kind)
    h, w = vals.shape[:2]
    if mode == "raw":
        rows = _round_half_up(vals[:, :, 0])
        cols = _round_half_up(vals[:, :, 1])
    else:
        r_idx, c_idx = np.indices((h, w))
        rows = _round_half_up(r_idx - vals[:, :, 1])
        cols = _round_half_up(c_idx - vals[:, :, 0])
    rows = np.clip(rows, 0, h - 1).astype(np.intp)
    cols = np.clip(cols, 0, w - 1).astype(np.intp)
    return np.stack([rows, cols], axis=-1)


def me_sample(noise, stack: MotionStack, mode: str = "auto") -> SparkedPrior:
    """Warp per-frame noise through the stack's lookup maps.

    One lookup per pixel is shared across all channels, so pixels resolving
    to the same source coordinate receive identical noise vectors.
    """
    noise = np.asarray(noise, dtype=np.float64)
    if noise.ndim != 4:
        raise ValueError(f"noise must be rank 4, got {noise.ndim}")
    if len(stack) != noise.shape[0]:
        raise ValueError(
            f"stack holds {len(stack)} maps for {noise.shape[0]} noise frames"
        )
    h, w = noise.shape[1:3]
    out = np.empty_like(noise)
    for f, mmap in enumerate(stack.maps):
        if mmap.data.shape[:2] != (h, w):
            raise ValueError(
                f"map {f} is {mmap.data.shape[:2]}, video frames are {(h, w)}"
            )
        lk = to_lookup(mmap, mode)
        out[f] = noise[f][lk[:, :, 0], lk[:, :, 1], :]
    return SparkedPrior(out, sampler="me", stack_indices=stack.indices)


def one_noise(shape, rng) -> np.ndarray:
    """One standard-normal frame replicated across all frames."""
    v, h, w, c = shape
    base = rng.standard_normal((h, w, c))
    return np.broadcast_to(base, (v, h, w, c)).copy()


def multi_noise(shape, rng) -> np.ndarray:
    """Independent standard-normal noise for every frame."""
    return rng.standard_normal(tuple(shape))


def u_sample_map(reference: MotionMap, rng) -> MotionMap:
    """Uniform values in [-50, 50], masked to the reference map's nonzero
    pixels (a pixel is live when either channel is nonzero)."""
    h, w = reference.data.shape[:2]
    mask = np.any(reference.data != 0.0, axis=2)
    vals = rng.uniform(0.0, 1.0, size=(h, w, 2)) * 100.0 - 50.0
    return MotionMap(vals * mask[:, :, None], kind="handcrafted")


def s_value_map(reference: MotionMap) -> MotionMap:
    """Row-major sequence values 0,1,2,... written to both channels, masked
    like u_sample_map."""
    h, w = reference.data.shape[:2]
    mask = np.any(reference.data != 0.0, axis=2)
    idx = (np.arange(h * w, dtype=np.float64).reshape(h, w)) * mask
    return MotionMap(np.stack([idx, idx], axis=-1), kind="handcrafted")


class PriorSource:
    """Per-attack supplier of noise priors for the estimator.

    ``resample_stack`` refreshes the per-frame map assignment (no-op for the
    motion-free baselines); ``draw`` produces one prior tensor.
    """

    kind = "base"
    needs_stack = False

    def resample_stack(self, rng) -> MotionStack | None:
        return None

    def draw(self, rng, stack: MotionStack | None) -> SparkedPrior:
        raise NotImplementedError


class MotionExcitedSource(PriorSource):
    """Sparked prior: a single shared noise frame warped per frame by maps
    sampled from the video's motion set."""

    needs_stack = True

    def __init__(self, motion_set: MotionSet, shape, lookup_mode: str = "auto",
                 kind: str = "me_mv"):
        if len(motion_set) == 0:
            raise ValueError("motion set is empty")
        self.motion_set = motion_set
        self.shape = tuple(shape)
        self.lookup_mode = lookup_mode
        self.kind = kind
        self._stack: MotionStack | None = None
        self._lookups: list | None = None

    def resample_stack(self, rng) -> MotionStack:
        stack = sample_motion_stack(self.motion_set, self.shape[0], rng)
        # lookups only depend on (map, mode); cache them per stack
        self._stack = stack
        self._lookups = [to_lookup(m, self.lookup_mode) for m in stack.maps]
        return stack

    def draw(self, rng, stack: MotionStack | None) -> SparkedPrior:
        if stack is None:
            raise ValueError("motion-excited source needs a sampled stack")
        if stack is self._stack and self._lookups is not None:
            v, h, w, c = self.shape
            base = rng.standard_normal((h, w, c))
            out = np.empty((v, h, w, c), dtype=np.float64)
            for f, lk in enumerate(self._lookups):
                out[f] = base[lk[:, :, 0], lk[:, :, 1], :]
            return SparkedPrior(out, sampler=self.kind,
                                stack_indices=stack.indices)
        base = one_noise(self.shape, rng)
        prior = me_sample(base, stack, self.lookup_mode)
        return SparkedPrior(prior.data, sampler=self.kind,
                            stack_indices=prior.stack_indices)


class OneNoiseSource(PriorSource):
    kind = "one_noise"

    def __init__(self, shape):
        self.shape = tuple(shape)

    def draw(self, rng, stack=None) -> SparkedPrior:
        return SparkedPrior(one_noise(self.shape, rng), sampler=self.kind)


class MultiNoiseSource(PriorSource):
    kind = "multi_noise"

    def __init__(self, shape):
        self.shape = tuple(shape)

    def draw(self, rng, stack=None) -> SparkedPrior:
        return SparkedPrior(multi_noise(self.shape, rng), sampler=self.kind)


def build_prior_source(
    kind: str,
    video,
    rng,
    *,
    interval_length: int = 12,
    lookup_mode: str = "auto",
    block_size: int = 16,
    search_radius: int = 7,
    flow_alpha: float = 1.0,
    flow_iterations: int = 100,
) -> PriorSource:
    """Construct the prior source for an attack from the clean video.

    Motion-based kinds build the motion set here, once; the handcrafted
    kinds additionally replace every map with its u_sample / s_value
    counterpart (masked to the original map's support) before use.
    """
    video = np.asarray(video, dtype=np.float64)
    shape = video.shape
    if kind == "one_noise":
        return OneNoiseSource(shape)
    if kind == "multi_noise":
        return MultiNoiseSource(shape)
    if kind not in SAMPLER_KINDS:
        raise ValueError(f"unknown sampler kind {kind!r}")

    representation = "flow" if kind == "me_of" else "mv"
    mset = build_motion_set(
        video,
        representation,
        interval_length,
        block_size=block_size,
        search_radius=search_radius,
        flow_alpha=flow_alpha,
        flow_iterations=flow_iterations,
    )
    if kind == "u_sample":
        maps = tuple(u_sample_map(m, rng) for m in mset.maps)
        mset = MotionSet(maps, mset.interval_length, mset.source_id)
    elif kind == "s_value":
        maps = tuple(s_value_map(m) for m in mset.maps)
        mset = MotionSet(maps, mset.interval_length, mset.source_id)
    return MotionExcitedSource(mset, shape, lookup_mode, kind)
