"""Grayscale image handling: P5 greymap I/O, resizing, contrast stretching
and geometric augmentation.

Images are plain ``float64`` numpy arrays of shape ``(height, width)`` with
intensities in ``[0, 1]``; row-major order is numpy's default.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import PnmFormatError

_WHITESPACE = b" \t\n\r\x0b\x0c"


def as_image(img, name="image") -> np.ndarray:
    """Validate ``img`` as a grayscale image and return it as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} intensities must lie in [0, 1]")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        (ha, wa), (hb, wb) = a.shape, b.shape
        raise ValueError(
            f"dimension mismatch: {names[0]} is {wa}x{ha}, {names[1]} is {wb}x{hb}"
        )


# ---------------------------------------------------------------------------
# P5 greymap I/O


def _read_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, start offset, position after token), skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c in _WHITESPACE and c:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PnmFormatError("unexpected end of header", start)
    return data[start:pos], start, pos


def _read_int(data: bytes, pos: int, what: str) -> tuple[int, int, int]:
    tok, start, pos = _read_token(data, pos)
    if not tok.isdigit():
        raise PnmFormatError(f"invalid {what} {tok!r}", start)
    return int(tok), start, pos


def decode_pgm(data: bytes, return_maxval: bool = False):
    """Decode P5 bytes into an image scaled to ``[0, 1]`` by maxval."""
    if data[:2] != b"P5":
        raise PnmFormatError("missing P5 magic number", 0)
    pos = 2
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PnmFormatError("expected whitespace after magic number", pos)
    width, start, pos = _read_int(data, pos, "width")
    if width < 1:
        raise PnmFormatError("width must be >= 1", start)
    height, start, pos = _read_int(data, pos, "height")
    if height < 1:
        raise PnmFormatError("height must be >= 1", start)
    maxval, start, pos = _read_int(data, pos, "maxval")
    if not 1 <= maxval <= 65535:
        raise PnmFormatError(f"maxval {maxval} outside 1..65535", start)
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PnmFormatError("expected single whitespace after maxval", pos)
    pos += 1

    nbytes = 1 if maxval < 256 else 2
    need = width * height * nbytes
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise PnmFormatError(
            f"truncated pixel payload: expected {need} bytes, got {len(payload)}",
            pos + len(payload),
        )
    dtype = np.uint8 if nbytes == 1 else np.dtype(">u2")
    raw = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    if raw.max() > maxval:
        bad = int(np.argmax(raw.ravel() > maxval))
        raise PnmFormatError(f"sample exceeds maxval {maxval}", pos + bad * nbytes)
    img = raw.astype(np.float64) / maxval
    return (img, maxval) if return_maxval else img


def encode_pgm(img, depth: int = 8) -> bytes:
    """Encode an image as P5 bytes at 8- or 16-bit depth (round half up)."""
    if depth not in (8, 16):
        raise ValueError(f"depth must be 8 or 16, got {depth!r}")
    img = as_image(img)
    maxval = 255 if depth == 8 else 65535
    q = np.floor(img * maxval + 0.5).astype(np.int64)
    np.clip(q, 0, maxval, out=q)
    h, w = img.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    body = q.astype(np.uint8 if depth == 8 else ">u2").tobytes()
    return header + body


def load_image(path) -> np.ndarray:
    """Read a P5 greymap (8- or 16-bit) from ``path``."""
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def atomic_write_bytes(path, data: bytes):
    """Write ``data`` to ``path`` via a temp file and rename."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def save_image(img, path, depth: int = 8):
    """Write ``img`` to ``path`` as a P5 greymap at the given bit depth."""
    atomic_write_bytes(path, encode_pgm(img, depth))


# ---------------------------------------------------------------------------
# Resampling


def _bilinear_sample(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Bilinear lookup at fractional coordinates with edge replication."""
    h, w = img.shape
    xs = np.clip(xs, 0.0, w - 1)
    ys = np.clip(ys, 0.0, h - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return np.clip(out, 0.0, 1.0)


def resize_bilinear(img, new_w: int, new_h: int) -> np.ndarray:
    """Resize with bilinear interpolation and pixel-center alignment.

    Output sample ``k`` reads source coordinate ``(k + 0.5) * in / out - 0.5``,
    clamped to the image.
    """
    img = as_image(img)
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {new_w}x{new_h}")
    h, w = img.shape
    if (h, w) == (new_h, new_w):
        return img.copy()
    xs = (np.arange(new_w) + 0.5) * (w / new_w) - 0.5
    ys = (np.arange(new_h) + 0.5) * (h / new_h) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return _bilinear_sample(img, yy, xx)


def nearest_rank_quantile(values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: sorted[ceil(q*n) - 1], index clamped to range."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = v.size
    idx = min(max(math.ceil(q * n) - 1, 0), n - 1)
    return float(v[idx])


def contrast_stretch(img, lower_pct: float = 0.01, upper_pct: float = 0.01) -> np.ndarray:
    """Saturate the bottom ``lower_pct`` and top ``upper_pct`` of intensities.

    Values at or below the lower quantile map to 0, at or above the upper
    quantile to 1, and the rest linearly in between. A degenerate image
    (equal quantiles) is returned unchanged.
    """
    img = as_image(img)
    if lower_pct < 0 or upper_pct < 0 or lower_pct + upper_pct >= 1:
        raise ValueError("need lower_pct, upper_pct >= 0 and lower_pct + upper_pct < 1")
    p_lo = nearest_rank_quantile(img, lower_pct)
    p_hi = nearest_rank_quantile(img, 1.0 - upper_pct)
    if p_hi == p_lo:
        return img.copy()
    return np.clip((img - p_lo) / (p_hi - p_lo), 0.0, 1.0)


@dataclass(frozen=True)
class AugmentSpec:
    """Parameters of one geometric augmentation.

    Positive ``rotation_degrees`` rotates content counter-clockwise as
    displayed (y axis pointing down); positive shifts move content right/down;
    ``zoom_factor > 1`` magnifies about the image center.
    """

    rotation_degrees: float = 0.0
    shift_x: float = 0.0
    shift_y: float = 0.0
    mirror_horizontal: bool = False
    zoom_factor: float = 1.0

    def __post_init__(self):
        if not -10.0 <= self.rotation_degrees <= 10.0:
            raise ValueError("rotation_degrees must lie in [-10, 10]")
        if not (-5.0 <= self.shift_x <= 5.0 and -5.0 <= self.shift_y <= 5.0):
            raise ValueError("shifts must lie in [-5, 5] pixels")
        if not self.zoom_factor > 0:
            raise ValueError("zoom_factor must be > 0")


def augment(img, spec: AugmentSpec) -> np.ndarray:
    """Apply mirror, rotation, shift and center zoom (in that order).

    The four transforms are composed into a single inverse mapping and
    sampled once with bilinear interpolation; samples falling outside the
    image replicate the nearest edge pixel.
    """
    img = as_image(img)
    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")

    # undo zoom
    if spec.zoom_factor != 1.0:
        xx = cx + (xx - cx) / spec.zoom_factor
        yy = cy + (yy - cy) / spec.zoom_factor
    # undo shift
    xx = xx - spec.shift_x
    yy = yy - spec.shift_y
    # undo rotation
    if spec.rotation_degrees != 0.0:
        theta = math.radians(spec.rotation_degrees)
        c, s = math.cos(theta), math.sin(theta)
        dx, dy = xx - cx, yy - cy
        xx = cx + c * dx - s * dy
        yy = cy + s * dx + c * dy
    # undo mirror
    if spec.mirror_horizontal:
        xx = (w - 1) - xx
    return _bilinear_sample(img, yy, xx)
