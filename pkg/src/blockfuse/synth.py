"""Seeded synthetic phantoms and degradations.

Stands in for a set of restoration models: each candidate is the phantom
with a mild global degradation plus a heavy one confined to its own seeded
rectangle, so different candidates are best in different places.

Random numbers come from xorshift64* (shifts 12/25/27, multiplier
0x2545F4914F6CDD1D) seeded through SplitMix64, so any implementation of
those two published generators reproduces the outputs bit for bit.
Bulk draws use ``lanes`` independent streams whose outputs are interleaved
step by step: draw ``i`` comes from lane ``i % lanes`` at step ``i // lanes``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .image import as_image

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_XS_MULT = np.uint64(0x2545F4914F6CDD1D)


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step; returns ``(output, new_state)``."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31), state


def derive_seed(seed: int, *tags: int) -> int:
    """Mix integer tags into a seed (one SplitMix64 step per tag)."""
    s = seed & MASK64
    for t in tags:
        s, _ = splitmix64(s ^ (t & MASK64))
    return s


class Xorshift64Star:
    """xorshift64* generator with ``lanes`` interleaved streams."""

    def __init__(self, seed: int, lanes: int = 1):
        if lanes < 1:
            raise ValueError("lanes must be >= 1")
        sm = seed & MASK64
        state = []
        for _ in range(lanes):
            out, sm = splitmix64(sm)
            state.append(out or 1)  # all-zero state is a fixed point
        self._state = np.array(state, dtype=np.uint64)

    @property
    def lanes(self) -> int:
        return self._state.size

    def next_u64(self, n: int) -> np.ndarray:
        """Next ``n`` outputs; a partially used final step is discarded."""
        steps = -(-n // self.lanes)
        out = np.empty((steps, self.lanes), dtype=np.uint64)
        x = self._state
        for i in range(steps):
            x = x ^ (x >> np.uint64(12))
            x = x ^ (x << np.uint64(25))
            x = x ^ (x >> np.uint64(27))
            out[i] = x * _XS_MULT
        self._state = x
        return out.ravel()[:n]

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def uniform_range(self, lo: float, hi: float, n: int = 1) -> np.ndarray:
        return lo + (hi - lo) * self.uniform(n)

    def normal(self, n: int) -> np.ndarray:
        """Standard normals by Box-Muller (cosine branch only)."""
        u1 = ((self.next_u64(n) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
        u2 = self.uniform(n)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


# tags for derive_seed
_TAG_PHANTOM, _TAG_RIDGE, _TAG_NOISE, _TAG_CANDIDATE, _TAG_MILD, _TAG_HEAVY = range(1, 7)
_NOISE_LANES = 1024


def generate_phantom(seed: int, w: int, h: int) -> np.ndarray:
    """Smooth "soft tissue" phantom: seeded Gaussian blobs scaled to [0, 1]."""
    if w < 16 or h < 16:
        raise ValueError(f"phantom needs dimensions >= 16, got {w}x{h}")
    rng = Xorshift64Star(derive_seed(seed, _TAG_PHANTOM))
    x = np.arange(w, dtype=np.float64)
    y = np.arange(h, dtype=np.float64)
    field = np.zeros((h, w))
    # broad anatomy-like structures, then finer texture
    for count, size_lo, size_hi, amp_lo, amp_hi in ((10, 0.08, 0.35, -0.6, 1.0),
                                                     (40, 0.01, 0.05, -0.25, 0.25)):
        for _ in range(count):
            cx, cy, sx, sy, amp = rng.uniform(5)
            cx *= w
            cy *= h
            sx = (size_lo + (size_hi - size_lo) * sx) * w
            sy = (size_lo + (size_hi - size_lo) * sy) * h
            amp = amp_lo + (amp_hi - amp_lo) * amp
            gx = np.exp(-0.5 * ((x - cx) / sx) ** 2)
            gy = np.exp(-0.5 * ((y - cy) / sy) ** 2)
            field += amp * np.outer(gy, gx)
    lo, hi = field.min(), field.max()
    return np.clip((field - lo) / (hi - lo), 0.0, 1.0)


@dataclass(frozen=True)
class DegradeSpec:
    """One degradation pass. ``region_mask`` is ``(x0, y0, x1, y1)``, half-open."""

    seed: int = 0
    blur_sigma: float = 0.0
    noise_sigma: float = 0.0
    ridge_amplitude: float = 0.0
    ridge_count: int = 0
    region_mask: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "ridge_count", int(self.ridge_count))
        for name in ("blur_sigma", "noise_sigma", "ridge_amplitude"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if min(self.blur_sigma, self.noise_sigma, self.ridge_amplitude) < 0 or self.ridge_count < 0:
            raise ValueError("degradation magnitudes must be non-negative")
        if self.region_mask is not None:
            object.__setattr__(self, "region_mask", tuple(int(v) for v in self.region_mask))
            if len(self.region_mask) != 4:
                raise ValueError("region_mask must be (x0, y0, x1, y1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["region_mask"] = list(self.region_mask) if self.region_mask else None
        return d


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, radius ``ceil(3 sigma)``, edge replication."""
    if sigma <= 0:
        return img.copy()
    r = int(math.ceil(3.0 * sigma))
    t = np.arange(-r, r + 1, dtype=np.float64)
    # a vanishing sigma overflows to a unit impulse, which is the right limit
    with np.errstate(over="ignore", divide="ignore"):
        taps = np.exp(-0.5 * (t / sigma) ** 2)
    taps /= taps.sum()
    h, w = img.shape
    p = np.pad(img, r, mode="edge")
    rows = sum(taps[k] * p[k:k + h, :] for k in range(taps.size))
    return sum(taps[k] * rows[:, k:k + w] for k in range(taps.size))


def _region(spec: DegradeSpec, shape) -> np.ndarray:
    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    if spec.region_mask is None:
        mask[:] = True
        return mask
    x0, y0, x1, y1 = spec.region_mask
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise ValueError(f"region_mask {spec.region_mask} outside {w}x{h} image")
    mask[y0:y1, x0:x1] = True
    return mask


def ridge_field(seed: int, amplitude: float, count: int, w: int, h: int) -> np.ndarray:
    """Additive smooth bands along the anti-diagonal direction."""
    field = np.zeros((h, w))
    if count == 0 or amplitude == 0:
        return field
    rng = Xorshift64Star(derive_seed(seed, _TAG_RIDGE))
    width = max(w, h) / 40.0
    diag = np.add.outer(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64))
    for _ in range(count):
        centre = float(rng.uniform_range(0.0, w + h - 2.0)[0])
        d = (diag - centre) / math.sqrt(2.0)
        field += amplitude * np.exp(-0.5 * (d / width) ** 2)
    return field


def degrade(img, spec: DegradeSpec) -> np.ndarray:
    """Blur, then ridge bands, then Gaussian noise, each only inside the mask."""
    img = as_image(img)
    h, w = img.shape
    mask = _region(spec, img.shape)
    out = img.copy()
    if spec.blur_sigma > 0:
        out = np.where(mask, gaussian_blur(out, spec.blur_sigma), out)
    if spec.ridge_count > 0 and spec.ridge_amplitude > 0:
        out = np.where(mask, out + ridge_field(spec.seed, spec.ridge_amplitude,
                                               spec.ridge_count, w, h), out)
    if spec.noise_sigma > 0:
        rng = Xorshift64Star(derive_seed(spec.seed, _TAG_NOISE), lanes=_NOISE_LANES)
        noise = spec.noise_sigma * rng.normal(h * w).reshape(h, w)
        out = np.where(mask, out + noise, out)
    return np.clip(out, 0.0, 1.0)


def candidate_specs(seed: int, n_candidates: int, w: int, h: int) -> list[list[DegradeSpec]]:
    """Degradation passes for each candidate: a mild global one, then a heavy
    one inside a seeded rectangle covering roughly 10-35% of the image."""
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    specs = []
    for k in range(n_candidates):
        rng = Xorshift64Star(derive_seed(seed, _TAG_CANDIDATE, k))
        blur, noise, rw, rh, rx, ry, hblur, hnoise, ramp, rcount = rng.uniform(10)
        mild = DegradeSpec(
            seed=derive_seed(seed, _TAG_MILD, k),
            blur_sigma=0.3 + 0.4 * blur,
            noise_sigma=0.008 + 0.008 * noise,
        )
        rw = max(1, int(w * (0.3 + 0.3 * rw)))
        rh = max(1, int(h * (0.3 + 0.3 * rh)))
        x0 = int(rx * (w - rw + 1))
        y0 = int(ry * (h - rh + 1))
        heavy = DegradeSpec(
            seed=derive_seed(seed, _TAG_HEAVY, k),
            blur_sigma=1.0 + 1.5 * hblur,
            noise_sigma=0.03 + 0.03 * hnoise,
            ridge_amplitude=0.08 + 0.07 * ramp,
            ridge_count=3 + int(4 * rcount),
            region_mask=(x0, y0, x0 + rw, y0 + rh),
        )
        specs.append([mild, heavy])
    return specs


def make_candidate_set(seed: int, n_candidates: int = 3, w: int = 256, h: int = 256):
    """Return ``(gt, candidates)``: a phantom and its degraded copies."""
    gt = generate_phantom(seed, w, h)
    candidates = []
    for passes in candidate_specs(seed, n_candidates, w, h):
        img = gt
        for spec in passes:
            img = degrade(img, spec)
        candidates.append(img)
    return gt, candidates
