"""Motion estimation on decoded frames.

Two representations are supported:

* ``mv``   -- exhaustive block matching between consecutive frames, composed
  over a fixed-length interval so every pixel of the interval's last frame
  carries its total displacement back to the interval's first frame.
* ``flow`` -- a dense iterative flow solved between the first and last frame
  of each interval (brightness constancy plus a smoothness penalty, Jacobi
  style updates with a fixed iteration count).

Both produce (H, W, 2) fields with channel 0 = horizontal displacement u and
channel 1 = vertical displacement v, measured in pixels. A video of V frames
split into non-overlapping intervals of length T yields N = V // T maps;
trailing frames that do not fill an interval are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import ShapeMismatchError

MAP_KINDS = ("block_mv", "accumulated_mv", "optical_flow", "handcrafted")

DEFAULT_BLOCK_SIZE = 16
DEFAULT_SEARCH_RADIUS = 7
DEFAULT_FLOW_ALPHA = 1.0
DEFAULT_FLOW_ITERS = 100


@dataclass(frozen=True)
class MotionMap:
    """Per-pixel displacement field (H, W, 2) plus its provenance tag."""

    data: np.ndarray
    kind: str = "block_mv"

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"motion map must be (H,W,2), got {arr.shape}")
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class MotionSet:
    """Ordered per-interval motion maps for one video."""

    maps: tuple
    interval_length: int
    source_id: str = ""

    def __len__(self):
        return len(self.maps)


@dataclass(frozen=True)
class MotionStack:
    """Per-frame map references drawn (with replacement) from a MotionSet."""

    maps: tuple
    indices: tuple = field(default=())

    def __len__(self):
        return len(self.maps)


def to_gray(frame) -> np.ndarray:
    """Channel-mean grayscale used by both matching and flow."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3:
        return arr.mean(axis=2)
    raise ValueError(f"frame must be (H,W) or (H,W,C), got shape {arr.shape}")


def estimate_block_motion(
    ref,
    cur,
    block_size: int = DEFAULT_BLOCK_SIZE,
    search_radius: int = DEFAULT_SEARCH_RADIUS,
) -> MotionMap:
    """Exhaustive SAD block matching of ``cur`` against ``ref``.

    The frame is tiled into block_size x block_size blocks (edge blocks are
    truncated). For each block every integer displacement (u, v) with
    |u|,|v| <= search_radius whose source block lies fully inside ``ref`` is
    scored by the sum of absolute grayscale differences. Ties are broken by
    the smaller |u|+|v|, then by scan order (v, then u, ascending). All
    pixels of a block receive the block's winning (u, v), defined as
    position-in-cur minus matched-position-in-ref.
    """
    ref = np.asarray(ref, dtype=np.float64)
    cur = np.asarray(cur, dtype=np.float64)
    if ref.shape != cur.shape:
        raise ShapeMismatchError(
            f"block matching: ref {ref.shape} vs cur {cur.shape}"
        )
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")
    if search_radius < 0:
        raise ValueError(f"search_radius must be >= 0, got {search_radius}")

    rg = to_gray(ref)
    cg = to_gray(cur)
    h, w = cg.shape
    out = np.zeros((h, w, 2), dtype=np.float64)

    for by in range(0, h, block_size):
        bh = min(block_size, h - by)
        for bx in range(0, w, block_size):
            bw = min(block_size, w - bx)
            blk = cg[by : by + bh, bx : bx + bw]
            best_sad = np.inf
            best_norm = np.inf
            best_u = 0
            best_v = 0
            for v in range(-search_radius, search_radius + 1):
                sy = by - v
                if sy < 0 or sy + bh > h:
                    continue
                for u in range(-search_radius, search_radius + 1):
                    sx = bx - u
                    if sx < 0 or sx + bw > w:
                        continue
                    sad = float(
                        np.abs(blk - rg[sy : sy + bh, sx : sx + bw]).sum()
                    )
                    norm = abs(u) + abs(v)
                    if sad < best_sad or (sad == best_sad and norm < best_norm):
                        best_sad = sad
                        best_norm = norm
                        best_u = u
                        best_v = v
            out[by : by + bh, bx : bx + bw, 0] = best_u
            out[by : by + bh, bx : bx + bw, 1] = best_v
    return MotionMap(out, kind="block_mv")


def accumulate_interval(
    frames,
    block_size: int = DEFAULT_BLOCK_SIZE,
    search_radius: int = DEFAULT_SEARCH_RADIUS,
) -> MotionMap:
    """Total displacement of the interval's last frame back to its first.

    Consecutive-frame block matches are composed by tracing each pixel
    backwards: d_total(p) = d_{T-1}(p) + d_{T-2}(p - d_{T-1}(p)) + ...,
    rounding every intermediate position to the nearest pixel and clamping
    it to the frame.
    """
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    t_len = len(frames)
    if t_len < 2:
        raise ValueError(f"interval needs at least 2 frames, got {t_len}")
    steps = [
        estimate_block_motion(frames[i - 1], frames[i], block_size, search_radius)
        for i in range(1, t_len)
    ]
    h, w = steps[0].data.shape[:2]
    rows, cols = np.indices((h, w))
    pos_r = rows.astype(np.float64)
    pos_c = cols.astype(np.float64)
    total_u = np.zeros((h, w), dtype=np.float64)
    total_v = np.zeros((h, w), dtype=np.float64)
    for step in reversed(steps):
        ir = np.clip(np.floor(pos_r + 0.5), 0, h - 1).astype(np.intp)
        ic = np.clip(np.floor(pos_c + 0.5), 0, w - 1).astype(np.intp)
        du = step.data[ir, ic, 0]
        dv = step.data[ir, ic, 1]
        total_u += du
        total_v += dv
        pos_c = pos_c - du
        pos_r = pos_r - dv
    return MotionMap(np.stack([total_u, total_v], axis=-1), kind="accumulated_mv")


def _neighbor_sum(a: np.ndarray) -> np.ndarray:
    s = np.zeros_like(a)
    s[1:, :] += a[:-1, :]
    s[:-1, :] += a[1:, :]
    s[:, 1:] += a[:, :-1]
    s[:, :-1] += a[:, 1:]
    return s


def flow_energy(u, v, ix, iy, it, alpha: float) -> float:
    """Objective the flow iterations descend: data term plus alpha times the
    squared forward differences of the field (summed over grid edges)."""
    data = ix * u + iy * v + it
    e = float((data * data).sum())
    for f in (u, v):
        e += alpha * float(((f[1:, :] - f[:-1, :]) ** 2).sum())
        e += alpha * float(((f[:, 1:] - f[:, :-1]) ** 2).sum())
    return e


def estimate_optical_flow(
    ref,
    cur,
    alpha: float = DEFAULT_FLOW_ALPHA,
    iterations: int = DEFAULT_FLOW_ITERS,
    return_energies: bool = False,
):
    """Dense flow between two frames via fixed-count Jacobi iterations.

    Minimizes sum((Ix*u + Iy*v + It)^2) + alpha * smoothness with a per-pixel
    2x2 block solve, neighbors held at their previous values. Deterministic
    for fixed inputs and parameters.
    """
    if iterations <= 0:
        raise ValueError(f"iterations must be > 0, got {iterations}")
    ref = np.asarray(ref, dtype=np.float64)
    cur = np.asarray(cur, dtype=np.float64)
    if ref.shape != cur.shape:
        raise ShapeMismatchError(f"optical flow: ref {ref.shape} vs cur {cur.shape}")
    # data terms use the 8-bit intensity convention so alpha keeps its
    # customary magnitude relative to squared image gradients
    rg = to_gray(ref) * 255.0
    cg = to_gray(cur) * 255.0
    iy, ix = np.gradient(0.5 * (rg + cg))
    it = cg - rg

    h, w = rg.shape
    deg = _neighbor_sum(np.ones((h, w), dtype=np.float64))
    u = np.zeros((h, w), dtype=np.float64)
    v = np.zeros((h, w), dtype=np.float64)
    denom = alpha * deg + ix * ix + iy * iy
    energies = []
    for _ in range(iterations):
        ubar = _neighbor_sum(u) / deg
        vbar = _neighbor_sum(v) / deg
        correction = (ix * ubar + iy * vbar + it) / denom
        u = ubar - ix * correction
        v = vbar - iy * correction
        if return_energies:
            energies.append(flow_energy(u, v, ix, iy, it, alpha))
    flow = MotionMap(np.stack([u, v], axis=-1), kind="optical_flow")
    if return_energies:
        return flow, energies
    return flow


def build_motion_set(
    video,
    representation: str = "mv",
    interval_length: int = 12,
    *,
    block_size: int = DEFAULT_BLOCK_SIZE,
    search_radius: int = DEFAULT_SEARCH_RADIUS,
    flow_alpha: float = DEFAULT_FLOW_ALPHA,
    flow_iterations: int = DEFAULT_FLOW_ITERS,
    source_id: str = "",
) -> MotionSet:
    """Split the video into non-overlapping intervals and compute one map each.

    ``mv`` accumulates per-step block matches across the interval; ``flow``
    solves a single dense flow from the interval's first frame to its last.
    Trailing frames short of a full interval are ignored.
    """
    video = np.asarray(video, dtype=np.float64)
    if video.ndim != 4:
        raise ValueError(f"video must be rank 4, got {video.ndim}")
    n_frames = video.shape[0]
    if interval_length < 2:
        raise ValueError(f"interval_length must be >= 2, got {interval_length}")
    if n_frames < interval_length:
        raise ValueError(
            f"video has {n_frames} frames, fewer than interval length "
            f"{interval_length}"
        )
    if representation not in ("mv", "flow"):
        raise ValueError(f"representation must be 'mv' or 'flow', got {representation!r}")

    n_intervals = n_frames // interval_length
    maps = []
    for n in range(n_intervals):
        chunk = video[n * interval_length : (n + 1) * interval_length]
        if representation == "mv":
            maps.append(accumulate_interval(chunk, block_size, search_radius))
        else:
            maps.append(
                estimate_optical_flow(chunk[0], chunk[-1], flow_alpha, flow_iterations)
            )
    return MotionSet(tuple(maps), interval_length, source_id)


def sample_motion_stack(mset: MotionSet, num_frames: int, rng) -> MotionStack:
    """Draw one map per frame, uniformly with replacement. Deterministic for
    a given generator state."""
    if len(mset) == 0:
        raise ValueError("cannot sample from an empty motion set")
    if num_frames < 1:
        raise ValueError(f"num_frames must be >= 1, got {num_frames}")
    idx = rng.integers(0, len(mset), size=num_frames)
    return MotionStack(
        tuple(mset.maps[i] for i in idx), tuple(int(i) for i in idx)
    )
