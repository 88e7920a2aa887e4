import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesampler.tensor import (
    ShapeMismatchError,
    VT01DtypeError,
    VT01Error,
    VT01MagicError,
    clip_to_ball,
    linf_dist,
    read_vt01,
    sign,
    validate_video,
    write_vt01,
)


def test_clip_saturates_upper_bound():
    out = clip_to_ball(np.array([0.60]), np.array([0.50]), 0.03)
    assert out[0] == pytest.approx(0.53)


def test_clip_keeps_interior_point():
    out = clip_to_ball(np.array([0.51]), np.array([0.50]), 0.03)
    assert out[0] == pytest.approx(0.51)


def test_clip_applies_pixel_clamp_after_ball():
    # kappa-clip gives -0.02, then the [0,1] clamp lifts it to 0
    out = clip_to_ball(np.array([-0.05]), np.array([0.01]), 0.03)
    assert out[0] == 0.0


def test_clip_shape_mismatch_names_both_shapes():
    with pytest.raises(ShapeMismatchError) as err:
        clip_to_ball(np.zeros((2, 3)), np.zeros((3, 2)), 0.1)
    assert "(2, 3)" in str(err.value) and "(3, 2)" in str(err.value)


def test_clip_rejects_nonpositive_kappa():
    with pytest.raises(ValueError):
        clip_to_ball(np.zeros(3), np.zeros(3), 0.0)


def test_clip_idempotent_and_bounded_on_random_tensors():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        shape = tuple(rng.integers(1, 5, size=4))
        x0 = rng.uniform(0, 1, shape)
        x = rng.normal(0.5, 1.0, shape)
        kappa = float(rng.uniform(0.01, 0.2))
        once = clip_to_ball(x, x0, kappa)
        assert np.array_equal(clip_to_ball(once, x0, kappa), once)
        assert linf_dist(once, x0) <= kappa + 1e-12


def test_sign_examples():
    assert np.array_equal(sign([0.3, -2.0, 0.0]), [1, -1, 0])
    assert np.array_equal(sign(np.zeros(5)), np.zeros(5))
    assert sign([1e-12])[0] == 1.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=64))
@settings(max_examples=200, deadline=None)
def test_sign_is_odd(values):
    t = np.asarray(values)
    assert np.array_equal(sign(-t), -sign(t))


def test_linf_examples():
    a = np.array([0.2, 0.2])
    assert linf_dist(a, a) == 0.0
    assert linf_dist(np.array([0.01, -0.03]), np.zeros(2)) == pytest.approx(0.03)
    with pytest.raises(ShapeMismatchError):
        linf_dist(np.zeros(2), np.zeros(3))


def test_linf_zero_iff_equal():
    a = np.array([0.5, 0.25])
    b = a.copy()
    b[1] += 1e-9
    assert linf_dist(a, b) > 0.0


def test_validate_video_contract():
    ok = validate_video(np.full((2, 3, 4, 3), 0.5))
    assert ok.dtype == np.float64
    with pytest.raises(ValueError):
        validate_video(np.full((3, 4, 3), 0.5))  # rank 3
    with pytest.raises(ValueError):
        validate_video(np.full((1, 2, 2, 3), 1.5))  # out of range
    with pytest.raises(ValueError):
        validate_video(np.full((1, 2, 2, 3), np.nan))


def test_vt01_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    arr = rng.uniform(0, 1, (2, 4, 5, 3)).astype(np.float32)
    path = tmp_path / "clip.vt"
    write_vt01(path, arr)
    back = read_vt01(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, arr)
    # writing what was read reproduces the file byte for byte
    path2 = tmp_path / "clip2.vt"
    write_vt01(path2, back)
    assert path.read_bytes() == path2.read_bytes()


def test_vt01_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.vt"
    path.write_bytes(b"NOPE" + bytes([1, 1, 1, 0, 0, 0]) + b"\x00" * 4)
    with pytest.raises(VT01MagicError):
        read_vt01(path)


def test_vt01_rejects_bad_dtype(tmp_path):
    path = tmp_path / "bad.vt"
    path.write_bytes(b"VT01" + bytes([2, 1, 1, 0, 0, 0]) + b"\x00" * 4)
    with pytest.raises(VT01DtypeError):
        read_vt01(path)


def test_vt01_rejects_truncated_payload(tmp_path):
    path = tmp_path / "trunc.vt"
    path.write_bytes(b"VT01" + bytes([1, 1, 4, 0, 0, 0]) + b"\x00" * 8)
    with pytest.raises(VT01Error):
        read_vt01(path)
