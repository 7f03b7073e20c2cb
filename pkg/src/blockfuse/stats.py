"""Group comparison statistics: one-way ANOVA, Levene's test and Tukey HSD."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr

from ._special import f_sf
from .errors import DegenerateDataError


@dataclass(frozen=True)
class GroupData:
    names: tuple
    groups: tuple

    def __post_init__(self):
        groups = tuple(np.asarray(g, dtype=np.float64).ravel() for g in self.groups)
        names = tuple(str(n) for n in self.names)
        if len(groups) < 2:
            raise ValueError("need at least two groups")
        if len(names) != len(groups):
            raise ValueError("one name per group required")
        for n, g in zip(names, groups):
            if g.size < 2:
                raise ValueError(f"group {n!r} has fewer than two observations")
            if not np.all(np.isfinite(g)):
                raise ValueError(f"group {n!r} contains non-finite values")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_lists(cls, *groups, names=None):
        if names is None:
            names = [f"g{i}" for i in range(len(groups))]
        return cls(tuple(names), tuple(groups))

    @classmethod
    def from_csv(cls, path):
        """Read a ``group,value`` CSV; groups keep first-appearance order."""
        data = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"group", "value"} <= set(reader.fieldnames):
                raise ValueError(f"{path}: expected header 'group,value'")
            for lineno, row in enumerate(reader, start=2):
                try:
                    value = float(row["value"])
                except (TypeError, ValueError):
                    raise ValueError(f"{path}:{lineno}: malformed value {row['value']!r}") from None
                data.setdefault(row["group"], []).append(value)
        return cls(tuple(data), tuple(data.values()))


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float

    def summary(self) -> str:
        return f"F({self.df_between}, {self.df_within})={self.f_stat:.3f}, p={self.p_value:.3f}"


def _anova(groups):
    k = len(groups)
    n_total = sum(g.size for g in groups)
    grand = np.concatenate(groups).mean()
    means = [g.mean() for g in groups]
    ss_between = float(sum(g.size * (m - grand) ** 2 for g, m in zip(groups, means)))
    ss_within = float(sum(np.sum((g - m) ** 2) for g, m in zip(groups, means)))
    df_b, df_w = k - 1, n_total - k
    if ss_within == 0.0:
        raise DegenerateDataError("within-group variance is zero in every group")
    ms_within = ss_within / df_w
    f = (ss_between / df_b) / ms_within
    return AnovaResult(f, df_b, df_w, f_sf(f, df_b, df_w)), ms_within


def one_way_anova(g: GroupData) -> AnovaResult:
    """One-way ANOVA F test; the p value is the F(k-1, N-k) upper tail."""
    return _anova(g.groups)[0]


@dataclass(frozen=True)
class LeveneResult:
    w_stat: float
    p_value: float


def levene(g: GroupData) -> LeveneResult:
    """Levene's test: ANOVA on absolute deviations from each group mean."""
    dev = [np.abs(x - x.mean()) for x in g.groups]
    res, _ = _anova(dev)
    return LeveneResult(res.f_stat, res.p_value)


# ---------------------------------------------------------------------------
# Studentized range distribution

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _gauss_legendre_grid(lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return x, w


_Z, _ZW = _gauss_legendre_grid(-8.5, 8.5, 34)
_PHI_Z = np.exp(-0.5 * _Z ** 2) / math.sqrt(2.0 * math.pi)
_CDF_Z = ndtr(_Z)


def _range_cdf(w: np.ndarray, k: int) -> np.ndarray:
    """P(range of k iid standard normals <= w), for an array of w."""
    inner = np.clip(_CDF_Z[None, :] - ndtr(_Z[None, :] - w[:, None]), 0.0, 1.0)
    return k * (inner ** (k - 1) * _PHI_Z[None, :]) @ _ZW


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """P(Q <= q) for the studentized range with ``k`` means and ``df`` d.o.f.

    Integrates the normal-range probability against the density of
    ``sqrt(chi2_df / df)`` with composite Gauss-Legendre rules on both levels.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if df <= 0:
        raise ValueError("df must be > 0")
    if q <= 0:
        return 0.0
    spread = 15.0 * math.sqrt(2.0 * df)
    s_lo = math.sqrt(max(df - spread, 0.0) / df)
    s_hi = math.sqrt((df + spread + 60.0) / df)
    s, ws = _gauss_legendre_grid(s_lo, s_hi, 80)
    half = df / 2.0
    log_dens = (math.log(2.0) + half * math.log(half) - math.lgamma(half)
                + (df - 1.0) * np.log(s) - half * s * s)
    cdf = float(np.sum(ws * np.exp(log_dens) * _range_cdf(q * s, k)))
    return min(max(cdf, 0.0), 1.0)


def studentized_range_sf(q: float, k: int, df: float) -> float:
    return 1.0 - studentized_range_cdf(q, k, df)


def studentized_range_ppf(p: float, k: int, df: float, tol: float = 1e-9) -> float:
    """Critical value q with P(Q <= q) = p, by bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    while studentized_range_cdf(hi, k, df) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if studentized_range_cdf(mid, k, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TukeyPair:
    group_a: str
    group_b: str
    mean_diff: float
    q_stat: float
    p_adj: float
    significant: bool


def tukey_hsd(g: GroupData, alpha: float = 0.05) -> list[TukeyPair]:
    """Tukey-Kramer pairwise comparisons after a one-way ANOVA.

    ``mean_diff`` is ``mean(a) - mean(b)``; ``q_stat`` is its absolute value
    over ``sqrt(MSW / 2 * (1/n_a + 1/n_b))``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    _, msw = _anova(g.groups)
    k = len(g.groups)
    df_w = sum(x.size for x in g.groups) - k
    means = [x.mean() for x in g.groups]
    out = []
    for i, j in itertools.combinations(range(k), 2):
        ni, nj = g.groups[i].size, g.groups[j].size
        diff = float(means[i] - means[j])
        q = abs(diff) / math.sqrt(msw / 2.0 * (1.0 / ni + 1.0 / nj))
        p = studentized_range_sf(q, k, df_w)
        out.append(TukeyPair(g.names[i], g.names[j], diff, q, p, p < alpha))
    return out


def describe(g: GroupData) -> list[dict]:
    """Per-group descriptive moments (not a normality test).

    Skewness and excess kurtosis are the plain moment ratios ``m3/m2**1.5``
    and ``m4/m2**2 - 3``.
    """
    rows = []
    for name, x in zip(g.names, g.groups):
        d = x - x.mean()
        m2 = float(np.mean(d ** 2))
        if m2 > 0:
            skew = float(np.mean(d ** 3)) / m2 ** 1.5
            kurt = float(np.mean(d ** 4)) / m2 ** 2 - 3.0
        else:
            skew = kurt = 0.0
        rows.append({
            "group": name, "n": int(x.size), "mean": float(x.mean()),
            "std": float(x.std(ddof=1)), "skewness": skew, "excess_kurtosis": kurt,
        })
    return rows


def stats_report(g: GroupData, alpha: float = 0.05) -> dict:
    """ANOVA, Levene and Tukey results plus descriptive moments as a dict."""
    anova = one_way_anova(g)
    return {
        "anova": asdict(anova),
        "levene": asdict(levene(g)),
        "tukey": [asdict(t) for t in tukey_hsd(g, alpha)],
        "descriptive": describe(g),
        "descriptive_note": "skewness/kurtosis are descriptive only; no normality test is performed",
        "summary": anova.summary(),
    }
