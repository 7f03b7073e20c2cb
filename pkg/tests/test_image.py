import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blockfuse.errors import PnmFormatError
from blockfuse.image import (AugmentSpec, augment, contrast_stretch, decode_pgm, encode_pgm,
                             load_image, resize_bilinear, save_image)

images = arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
                elements=st.floats(0.0, 1.0))


def test_load_8bit(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    img = load_image(p)
    assert img.shape == (2, 2)
    np.testing.assert_array_equal(img.ravel(), [0.0, 1.0, 128 / 255, 64 / 255])


def test_load_16bit_maxval_maps_to_one():
    img = decode_pgm(b"P5\n1 1\n65535\n\xff\xff")
    assert img[0, 0] == 1.0


def test_load_header_with_comment():
    img = decode_pgm(b"P5\n# made by hand\n2 1\n# c\n255\n\x00\xff")
    np.testing.assert_array_equal(img, [[0.0, 1.0]])


def test_truncated_payload_names_offset():
    with pytest.raises(PnmFormatError) as exc:
        decode_pgm(b"P5\n2 2\n255\n\x00\x01\x02")
    assert exc.value.offset == len(b"P5\n2 2\n255\n") + 3
    assert "byte offset" in str(exc.value)


@pytest.mark.parametrize("maxval", [b"0", b"65536", b"70000"])
def test_bad_maxval(maxval):
    with pytest.raises(PnmFormatError, match="maxval"):
        decode_pgm(b"P5\n1 1\n" + maxval + b"\n\x00\x00")


@pytest.mark.parametrize("data", [b"P2\n1 1\n255\n0", b"P5\nx 1\n255\n\x00", b"P5\n1"])
def test_malformed_header(data):
    with pytest.raises(PnmFormatError):
        decode_pgm(data)


def test_save_constant_half_8bit(tmp_path):
    p = tmp_path / "h.pgm"
    save_image(np.full((3, 4), 0.5), p, depth=8)
    data = p.read_bytes()
    assert data.startswith(b"P5\n4 3\n255\n")
    assert set(data[len(b"P5\n4 3\n255\n"):]) == {128}


def test_save_bad_depth(tmp_path):
    with pytest.raises(ValueError):
        save_image(np.zeros((2, 2)), tmp_path / "x.pgm", depth=12)


def test_save_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        save_image(np.zeros((2, 2)), tmp_path / "missing" / "x.pgm")


@settings(max_examples=50, deadline=None)
@given(images, st.sampled_from([8, 16]))
def test_roundtrip_within_one_step(img, depth):
    out = decode_pgm(encode_pgm(img, depth))
    step = 1 / (255 if depth == 8 else 65535)
    assert out.shape == img.shape
    assert np.max(np.abs(out - img)) <= step / 2 + 1e-15


def test_resize_identity_and_constant():
    rng = np.random.default_rng(0)
    img = rng.random((7, 5))
    np.testing.assert_array_equal(resize_bilinear(img, 5, 7), img)
    const = np.full((4, 6), 0.3)
    np.testing.assert_allclose(resize_bilinear(const, 17, 3), 0.3, rtol=0, atol=1e-15)


def test_resize_two_to_three():
    # centres of the 3 outputs map to -1/6 (clamped to 0), 0.5 and 7/6 (clamped to 1)
    out = resize_bilinear(np.array([[0.0, 1.0]]), 3, 1)
    np.testing.assert_allclose(out, [[0.0, 0.5, 1.0]], atol=1e-15)


def test_resize_zero_target():
    with pytest.raises(ValueError):
        resize_bilinear(np.zeros((2, 2)), 0, 2)


def test_contrast_stretch_degenerate_and_identity():
    const = np.full((4, 4), 0.7)
    np.testing.assert_array_equal(contrast_stretch(const, 0.01, 0.01), const)
    full = np.linspace(0, 1, 16).reshape(4, 4)
    np.testing.assert_allclose(contrast_stretch(full, 0.0, 0.0), full, atol=1e-15)


def test_contrast_stretch_ramp():
    ramp = (np.arange(100) / 100.0).reshape(10, 10)
    out = contrast_stretch(ramp, 0.01, 0.01).ravel()
    # nearest rank, computed by sorting: 1% -> sorted[0], 99% -> sorted[98]
    srt = np.sort(ramp.ravel())
    p_lo, p_hi = srt[0], srt[98]
    expected = np.clip((ramp.ravel() - p_lo) / (p_hi - p_lo), 0, 1)
    np.testing.assert_allclose(out, expected, atol=1e-15)
    assert out[0] == 0.0 and out[98] == 1.0 and out[99] == 1.0
    assert 0 < out[50] < 1


def test_contrast_stretch_bad_pct():
    with pytest.raises(ValueError):
        contrast_stretch(np.zeros((2, 2)), 0.6, 0.5)


def test_augment_identity():
    rng = np.random.default_rng(1)
    img = rng.random((9, 13))
    np.testing.assert_array_equal(augment(img, AugmentSpec()), img)


def test_mirror_is_involution():
    img = np.random.default_rng(2).random((8, 11))
    m = AugmentSpec(mirror_horizontal=True)
    once = augment(img, m)
    np.testing.assert_array_equal(once, img[:, ::-1])
    np.testing.assert_array_equal(augment(once, m), img)


def test_shift_roundtrip_interior():
    img = np.random.default_rng(3).random((12, 12))
    back = augment(augment(img, AugmentSpec(shift_x=2)), AugmentSpec(shift_x=-2))
    np.testing.assert_array_equal(back[:, 2:-2], img[:, 2:-2])


def test_shift_moves_content_right():
    img = np.zeros((5, 5))
    img[2, 1] = 1.0
    out = augment(img, AugmentSpec(shift_x=2, shift_y=1))
    assert out[3, 3] == 1.0


@settings(max_examples=30, deadline=None)
@given(images.filter(lambda a: min(a.shape) >= 2),
       st.floats(-10, 10), st.floats(-5, 5), st.floats(-5, 5), st.booleans(), st.floats(0.5, 2))
def test_augment_preserves_shape_and_range(img, rot, sx, sy, mirror, zoom):
    out = augment(img, AugmentSpec(rot, sx, sy, mirror, zoom))
    assert out.shape == img.shape
    assert out.min() >= 0.0 and out.max() <= 1.0


@pytest.mark.parametrize("kwargs", [{"rotation_degrees": 11}, {"shift_x": -6},
                                    {"zoom_factor": 0}])
def test_augment_spec_validation(kwargs):
    with pytest.raises(ValueError):
        AugmentSpec(**kwargs)


def test_rejects_out_of_range_image():
    with pytest.raises(ValueError):
        resize_bilinear(np.array([[1.5]]), 2, 2)
