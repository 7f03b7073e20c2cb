"""Full-reference image quality metrics and histogram distances.

The SSIM family works on arrays of shape ``(..., H, W)`` internally so that
the fusion code can score thousands of equally sized blocks in one call;
the public ``ssim``/``ms_ssim`` functions take single 2-D images.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .image import as_image, check_same_shape

DEFAULT_LEVEL_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
HIST_BINS = 256


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd and >= 1, got {self.window_size}")
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be > 0")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be > 0")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be > 0")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


@dataclass(frozen=True)
class MsSsimParams:
    base: SsimParams = field(default_factory=SsimParams)
    max_levels: int = 5
    level_weights: tuple = DEFAULT_LEVEL_WEIGHTS

    def __post_init__(self):
        object.__setattr__(self, "level_weights", tuple(float(w) for w in self.level_weights))
        if not 1 <= self.max_levels <= len(self.level_weights):
            raise ValueError("max_levels must be between 1 and len(level_weights)")
        if any(w <= 0 for w in self.level_weights):
            raise ValueError("level weights must be positive")


def gaussian_window_1d(size: int, sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian taps centred on the middle sample."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """2-D separable Gaussian window (outer product of the 1-D taps)."""
    g = gaussian_window_1d(size, sigma)
    return np.outer(g, g)


def _filter_valid(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # Shifted-slice sums keep the arithmetic elementwise, so a block scored
    # inside a batch gets the same value as when scored alone.
    n = taps.size
    h, w = x.shape[-2:]
    rows = taps[0] * x[..., 0:h - n + 1, :]
    for k in range(1, n):
        rows = rows + taps[k] * x[..., k:k + h - n + 1, :]
    out = taps[0] * rows[..., :, 0:w - n + 1]
    for k in range(1, n):
        out = out + taps[k] * rows[..., :, k:k + w - n + 1]
    return out


def _ssim_maps(a, b, window_size, sigma, c1, c2):
    """Return (ssim map, contrast-structure map) over the valid region."""
    taps = gaussian_window_1d(window_size, sigma)
    mu_a = _filter_valid(a, taps)
    mu_b = _filter_valid(b, taps)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = _filter_valid(a * a, taps) - mu_aa
    var_b = _filter_valid(b * b, taps) - mu_bb
    cov = _filter_valid(a * b, taps) - mu_ab
    luminance = (2.0 * mu_ab + c1) / (mu_aa + mu_bb + c1)
    cs = (2.0 * cov + c2) / (var_a + var_b + c2)
    # analytic range is [-1, 1]; clip rounding excursions
    cs = np.clip(cs, -1.0, 1.0)
    return np.clip(luminance * cs, -1.0, 1.0), cs


def ssim(a, b, p: SsimParams | None = None):
    """Mean SSIM and the local SSIM map (valid region, no padding).

    Returns
    -------
    score : float
    ssim_map : ndarray of shape ``(H - win + 1, W - win + 1)``
    """
    p = p or SsimParams()
    a = as_image(a, "a")
    b = as_image(b, "b")
    check_same_shape(a, b)
    if min(a.shape) < p.window_size:
        raise ValueError(
            f"image {a.shape[1]}x{a.shape[0]} is smaller than the "
            f"{p.window_size}x{p.window_size} SSIM window"
        )
    smap, _ = _ssim_maps(a, b, p.window_size, p.gaussian_sigma, p.c1, p.c2)
    return float(smap.mean()), smap


def adaptive_levels(min_dim: int, p: MsSsimParams) -> int:
    """Number of MS-SSIM scales used for an image whose short side is ``min_dim``.

    Equals ``max(1, min(max_levels, floor(log2(min_dim / window)) + 1))``:
    every level except possibly a lone first one is at least a window wide.
    """
    win = p.base.window_size
    levels = 1
    d = min_dim
    while levels < p.max_levels and d // 2 >= win:
        d //= 2
        levels += 1
    return levels


def level_window(dim: int, p: SsimParams) -> tuple[int, float]:
    """Window size and sigma for a scale whose short side is ``dim``.

    A window larger than the image is shrunk to the largest odd size that
    fits, with sigma scaled in proportion.
    """
    if dim >= p.window_size:
        return p.window_size, p.gaussian_sigma
    win = dim if dim % 2 == 1 else dim - 1
    return win, p.gaussian_sigma * win / p.window_size


def _downsample2(x: np.ndarray) -> np.ndarray:
    h, w = x.shape[-2:]
    h2, w2 = h // 2, w // 2
    x = x[..., :2 * h2, :2 * w2]
    return 0.25 * (x[..., 0::2, 0::2] + x[..., 1::2, 0::2]
                   + x[..., 0::2, 1::2] + x[..., 1::2, 1::2])


def _signed_pow(v, w):
    return np.sign(v) * np.abs(v) ** w


def ms_ssim_batch(a: np.ndarray, b: np.ndarray, p: MsSsimParams | None = None) -> np.ndarray:
    """MS-SSIM over the trailing two axes of equally shaped stacks.

    Returns one score per leading index (a 0-d array for 2-D input).
    """
    p = p or MsSsimParams()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim < 2 or min(a.shape[-2:]) < 1:
        raise ValueError("MS-SSIM needs non-empty images")
    levels = adaptive_levels(min(a.shape[-2:]), p)
    weights = np.asarray(p.level_weights[:levels])
    weights = weights / weights.sum()
    base = p.base
    score = np.ones(a.shape[:-2])
    for j in range(levels):
        win, sigma = level_window(min(a.shape[-2:]), base)
        smap, csmap = _ssim_maps(a, b, win, sigma, base.c1, base.c2)
        term = smap if j == levels - 1 else csmap
        score = score * _signed_pow(term.mean(axis=(-2, -1)), weights[j])
        if j < levels - 1:
            a = _downsample2(a)
            b = _downsample2(b)
    return score


def ms_ssim(a, b, p: MsSsimParams | None = None) -> float:
    """Multi-scale SSIM between two images.

    Contrast-structure means at every scale but the coarsest, full SSIM at
    the coarsest, combined as a weighted product (weights renormalised to
    the number of scales that fit, see :func:`adaptive_levels`). Scales are
    built with 2x2 mean pooling. A negative per-scale mean is raised to its
    weight sign-preservingly so the score stays within ``[-1, 1]``.
    """
    a = as_image(a, "a")
    b = as_image(b, "b")
    check_same_shape(a, b)
    return float(ms_ssim_batch(a, b, p))


def psnr(a, b, max_val: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    a = as_image(a, "a")
    b = as_image(b, "b")
    check_same_shape(a, b)
    if max_val <= 0:
        raise ValueError("max_val must be > 0")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val ** 2 / mse)


# ---------------------------------------------------------------------------
# Histograms


def histogram(img) -> np.ndarray:
    """256-bin intensity histogram with unit mass.

    Bin ``b`` covers ``[b/256, (b+1)/256)``; the last bin also holds 1.0.
    """
    img = as_image(img)
    idx = np.minimum((img.ravel() * HIST_BINS).astype(np.intp), HIST_BINS - 1)
    counts = np.bincount(idx, minlength=HIST_BINS)
    return counts / img.size


def hist_correlation(h1, h2) -> float:
    """Pearson correlation between two histograms' bin vectors.

    A flat (zero-variance) histogram has no defined correlation: 1 is
    returned when both are flat, 0 when only one is.
    """
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    d1 = h1 - h1.mean()
    d2 = h2 - h2.mean()
    s1 = float(np.sum(d1 * d1))
    s2 = float(np.sum(d2 * d2))
    if s1 == 0.0 or s2 == 0.0:
        return 1.0 if s1 == s2 else 0.0
    return float(np.sum(d1 * d2)) / math.sqrt(s1 * s2)


def hist_intersection(h1, h2) -> float:
    return float(np.sum(np.minimum(h1, h2)))


def hist_chi_square(h_ref, h_test) -> float:
    """Chi-square distance with ``h_ref`` (the ground truth) as denominator.

    Bins where the reference is empty are skipped.
    """
    h_ref = np.asarray(h_ref, dtype=np.float64)
    h_test = np.asarray(h_test, dtype=np.float64)
    m = h_ref > 0
    return float(np.sum((h_ref[m] - h_test[m]) ** 2 / h_ref[m]))


def hist_bhattacharyya(h1, h2) -> float:
    """Bhattacharyya distance ``sqrt(1 - BC)``, in ``[0, 1]``."""
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    norm = math.sqrt(float(h1.sum()) * float(h2.sum()))
    if norm == 0.0:
        return 1.0
    # dividing by the (unit) masses keeps identical inputs at exactly 0
    bc = float(np.sum(np.sqrt(h1 * h2))) / norm
    return math.sqrt(min(max(1.0 - bc, 0.0), 1.0))


def mixed_loss(pred, gt, omega: float = 0.84, p: MsSsimParams | None = None) -> float:
    """``omega * (1 - MS-SSIM) + (1 - omega) * MAE``; zero for a perfect match."""
    pred = as_image(pred, "pred")
    gt = as_image(gt, "gt")
    check_same_shape(pred, gt, ("pred", "gt"))
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    mae = float(np.mean(np.abs(pred - gt)))
    return omega * (1.0 - ms_ssim(pred, gt, p)) + (1.0 - omega) * mae


# ---------------------------------------------------------------------------
# Reports


def fmt_value(v: float) -> str:
    """Seven significant digits, locale independent; ``inf`` for infinity."""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.7g}"


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    ms_ssim: float
    correlation: float
    intersection: float
    chi_square: float
    bhattacharyya: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.field_names())

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, n) for n in self.field_names())

    def to_csv_row(self) -> str:
        return ",".join(fmt_value(v) for v in self.as_tuple())

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps({k: (fmt_value(v) if math.isinf(v) else v)
                           for k, v in self.to_dict().items()})

    @classmethod
    def from_csv_row(cls, row: str) -> "MetricReport":
        return cls(*(float(x) for x in row.strip().split(",")))


def evaluate_pair(gt, pred) -> MetricReport:
    """All seven quality metrics for one (ground truth, prediction) pair."""
    gt = as_image(gt, "gt")
    pred = as_image(pred, "pred")
    check_same_shape(gt, pred, ("gt", "pred"))
    h_gt = histogram(gt)
    h_pred = histogram(pred)
    return MetricReport(
        psnr=psnr(gt, pred),
        ssim=ssim(gt, pred)[0],
        ms_ssim=ms_ssim(gt, pred),
        correlation=hist_correlation(h_gt, h_pred),
        intersection=hist_intersection(h_gt, h_pred),
        chi_square=hist_chi_square(h_gt, h_pred),
        bhattacharyya=hist_bhattacharyya(h_gt, h_pred),
    )
