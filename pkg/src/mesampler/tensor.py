"""Dense video-tensor primitives and the VT01 container format.

Videos are rank-4 numpy arrays laid out (frames, height, width, channels)
with pixel intensities in [0, 1]. Files always hold 32-bit little-endian
floats; in-memory math is free to use wider precision, but a read/write
round trip is bit-exact at 32 bits.
"""

from __future__ import annotations

import struct

import numpy as np

VT01_MAGIC = b"VT01"
VT01_DTYPE_F32LE = 0x01


class ShapeMismatchError(ValueError):
    """Two tensors that must share a shape do not."""


class VT01Error(ValueError):
    """Malformed VT01 container."""


class VT01MagicError(VT01Error):
    """File does not start with the VT01 magic."""


class VT01DtypeError(VT01Error):
    """File declares a dtype code this reader does not support."""


def _check_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: shape {a.shape} does not match {b.shape}")


def validate_video(x) -> np.ndarray:
    """Check that ``x`` is a valid clean video: rank 4, finite, values in [0, 1].

    Returns the array as float64 (wide internal precision).
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError(f"video must be rank 4 (V,H,W,C), got rank {arr.ndim}")
    if min(arr.shape) < 1:
        raise ValueError(f"video dims must all be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("video contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            f"video values must lie in [0,1], got range "
            f"[{arr.min():.6g}, {arr.max():.6g}]"
        )
    return arr


def clip_to_ball(x, x0, kappa: float) -> np.ndarray:
    """Project ``x`` onto the L-inf ball of radius ``kappa`` around ``x0``,
    then clamp to the valid pixel range [0, 1].
    """
    x = np.asarray(x, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    _check_same_shape(x, x0, "clip_to_ball")
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    out = np.clip(x, x0 - kappa, x0 + kappa)
    return np.clip(out, 0.0, 1.0)


def sign(t) -> np.ndarray:
    """Elementwise sign: -1, 0 or +1."""
    return np.sign(np.asarray(t, dtype=np.float64))


def linf_dist(a, b) -> float:
    """Maximum absolute elementwise difference between two same-shape tensors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b, "linf_dist")
    return float(np.abs(a - b).max())


def write_vt01(path, array) -> None:
    """Write an array to ``path`` in the VT01 container (f32 little-endian)."""
    arr = np.ascontiguousarray(np.asarray(array), dtype="<f4")
    if arr.ndim < 1 or arr.ndim > 255:
        raise VT01Error(f"VT01 rank must be in [1,255], got {arr.ndim}")
    header = VT01_MAGIC + struct.pack("<BB", VT01_DTYPE_F32LE, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dims)
        fh.write(arr.tobytes(order="C"))


def read_vt01(path) -> np.ndarray:
    """Read a VT01 file back into a float32 array.

    Raises VT01MagicError / VT01DtypeError on a wrong magic or dtype code so
    callers can tell corrupted files from unsupported ones.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 6:
        raise VT01Error(f"file too short to be VT01 ({len(blob)} bytes)")
    if blob[:4] != VT01_MAGIC:
        raise VT01MagicError(f"bad magic {blob[:4]!r}, expected {VT01_MAGIC!r}")
    dtype_code, rank = blob[4], blob[5]
    if dtype_code != VT01_DTYPE_F32LE:
        raise VT01DtypeError(f"unsupported dtype code 0x{dtype_code:02x}")
    need = 6 + 4 * rank
    if len(blob) < need:
        raise VT01Error("truncated dimension table")
    dims = struct.unpack(f"<{rank}I", blob[6:need])
    count = int(np.prod(dims)) if rank else 0
    payload = blob[need:]
    if len(payload) != 4 * count:
        raise VT01Error(
            f"payload holds {len(payload)} bytes, expected {4 * count} for dims {dims}"
        )
    data = np.frombuffer(payload, dtype="<f4")
    return data.reshape(dims).copy()
