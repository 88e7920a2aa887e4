"""Synthetic clips with known ground-truth motion.

Used by the test suite and the toy motion-sensitive oracle: a static
textured background with a textured patch translating at a fixed integer
velocity, plus rigid global-translation clips cropped from one big texture.
"""

from __future__ import annotations

import numpy as np


def translating_patch_video(
    num_frames: int = 12,
    height: int = 32,
    width: int = 32,
    channels: int = 3,
    patch_size: int = 16,
    start: tuple[int, int] = (8, 4),
    velocity: tuple[int, int] = (0, 1),
    background_level: float = 0.5,
    texture_amp: float = 0.05,
    patch_offset: float = 0.02,
    seed: int = 0,
):
    """Build a clip with one patch moving over a static background.

    Returns (video, masks): video is (V, H, W, C) float64 in [0, 1], masks is
    (V, H, W) bool flagging the patch. ``velocity`` is (rows, cols) per
    frame; the patch must stay inside the frame for all frames. The patch
    texture rides ``patch_offset`` above the background mean so a two-region
    mean classifier separates the regions.
    """
    rng = np.random.default_rng(seed)
    bg = background_level + texture_amp * (
        rng.uniform(-1.0, 1.0, size=(height, width, channels))
    )
    patch = (
        background_level
        + patch_offset
        + texture_amp * rng.uniform(-1.0, 1.0, size=(patch_size, patch_size, channels))
    )
    video = np.empty((num_frames, height, width, channels), dtype=np.float64)
    masks = np.zeros((num_frames, height, width), dtype=bool)
    r0, c0 = start
    dr, dc = velocity
    for f in range(num_frames):
        r = r0 + f * dr
        c = c0 + f * dc
        if r < 0 or c < 0 or r + patch_size > height or c + patch_size > width:
            raise ValueError(
                f"patch leaves the frame at frame {f} (top-left {(r, c)})"
            )
        frame = bg.copy()
        frame[r : r + patch_size, c : c + patch_size, :] = patch
        video[f] = frame
        masks[f, r : r + patch_size, c : c + patch_size] = True
    lo, hi = video.min(), video.max()
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"synthetic values escaped [0,1]: [{lo:.3g}, {hi:.3g}]")
    return video, masks


def global_translation_video(
    num_frames: int,
    height: int,
    width: int,
    channels: int = 3,
    step: tuple[int, int] = (0, 2),
    seed: int = 0,
):
    """Rigid integer translation: every frame is a window of one big static
    texture, slid by ``step`` (rows, cols) per frame. Wrap-free."""
    dr, dc = step
    pad_r = abs(dr) * (num_frames - 1)
    pad_c = abs(dc) * (num_frames - 1)
    rng = np.random.default_rng(seed)
    big = rng.uniform(0.0, 1.0, size=(height + pad_r, width + pad_c, channels))
    r0 = pad_r if dr > 0 else 0
    c0 = pad_c if dc > 0 else 0
    video = np.empty((num_frames, height, width, channels), dtype=np.float64)
    for f in range(num_frames):
        # window moves against the motion so the content appears to move by +step
        r = r0 - f * dr
        c = c0 - f * dc
        video[f] = big[r : r + height, c : c + width, :]
    return video
