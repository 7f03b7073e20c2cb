"""Binary classifier evaluation: confusion counts, threshold metrics,
ranking metrics and exact binomial confidence intervals."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from ._special import beta_ppf
from .errors import UndefinedMetricError
from .metrics import fmt_value


def check_eval_set(labels, scores):
    """Validate and return ``(labels, scores)`` as int/float arrays."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    if y.ndim != 1 or s.ndim != 1 or y.size != s.size:
        raise ValueError("labels and scores must be 1-D and of equal length")
    if y.size < 1:
        raise ValueError("evaluation set is empty")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if not np.all(np.isfinite(s)) or s.min() < 0.0 or s.max() > 1.0:
        raise ValueError("scores must lie in [0, 1]")
    return y.astype(np.int64), s


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(labels, scores, threshold: float = 0.5) -> ConfusionCounts:
    """Counts with ``score >= threshold`` predicted positive."""
    y, s = check_eval_set(labels, scores)
    pred = s >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        tn=int(np.sum(~pred & ~pos)),
        fp=int(np.sum(pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


@dataclass(frozen=True)
class ThresholdMetrics:
    accuracy: float
    recall: float
    precision: float
    f_score: float
    mcc: float
    # names of metrics whose denominator was zero (reported as 0)
    degenerate: frozenset = frozenset()


def threshold_metrics(c: ConfusionCounts) -> ThresholdMetrics:
    """Accuracy, recall, precision, F-score and Matthews correlation.

    A metric with a zero denominator is reported as 0 and its name is added
    to ``degenerate`` instead of raising.
    """
    if c.total <= 0:
        raise ValueError("confusion counts are empty")
    degenerate = set()

    def ratio(name, num, den):
        if den == 0:
            degenerate.add(name)
            return 0.0
        return num / den

    accuracy = ratio("accuracy", c.tp + c.tn, c.total)
    recall = ratio("recall", c.tp, c.tp + c.fn)
    precision = ratio("precision", c.tp, c.tp + c.fp)
    f_score = ratio("f_score", 2.0 * precision * recall, precision + recall)
    den = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    mcc = ratio("mcc", c.tp * c.tn - c.fp * c.fn, math.sqrt(den))
    return ThresholdMetrics(accuracy, recall, precision, f_score, mcc, frozenset(degenerate))


def _mid_ranks(x: np.ndarray) -> np.ndarray:
    uniq, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    mid = ends - (counts - 1) / 2.0
    return mid[inverse]


def auroc(labels, scores) -> float:
    """Area under the ROC curve (Mann-Whitney form, ties count one half)."""
    y, s = check_eval_set(labels, scores)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both positive and negative samples")
    rank_sum = float(_mid_ranks(s)[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auprc(labels, scores) -> float:
    """Area under the precision-recall curve, step-wise (no interpolation).

    Each distinct score, taken in descending order, is a threshold; the
    precision there is weighted by the recall gained since the previous one.
    """
    y, s = check_eval_set(labels, scores)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise UndefinedMetricError("AUPRC needs at least one positive sample")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.diff(s_sorted) != 0)
    ends = np.append(ends, s.size - 1)
    tp = np.cumsum(y_sorted)[ends]
    predicted = ends + 1
    precision = tp / predicted
    recall = tp / n_pos
    gains = np.diff(np.concatenate(([0.0], recall)))
    return float(np.sum(gains * precision))


def clopper_pearson(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval for ``successes/trials``."""
    k, n = successes, trials
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {k}/{n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lower = 0.0 if k == 0 else beta_ppf(alpha / 2.0, k, n - k + 1)
    upper = 1.0 if k == n else beta_ppf(1.0 - alpha / 2.0, k + 1, n - k)
    return lower, upper


def mcc_interval(mcc: float, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Clopper-Pearson interval applied to a Matthews coefficient.

    The coefficient is mapped affinely from ``[-1, 1]`` onto ``[0, 1]``,
    turned into ``round(m * n)`` pseudo-successes out of ``n``, and the
    resulting binomial interval is mapped back.
    """
    m = (mcc + 1.0) / 2.0
    k = int(math.floor(m * n + 0.5))
    lo, hi = clopper_pearson(k, n, alpha)
    return 2.0 * lo - 1.0, 2.0 * hi - 1.0


@dataclass(frozen=True)
class Table4Row:
    accuracy: float
    auroc: float
    auprc: float
    sensitivity: float
    precision: float
    f_score: float
    mcc: float
    mcc_ci_low: float
    mcc_ci_high: float

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(f.name for f in fields(cls))

    def to_csv_row(self) -> str:
        return ",".join(fmt_value(getattr(self, f.name)) for f in fields(self))

    def to_dict(self) -> dict:
        return asdict(self)


def table4_report(labels, scores, threshold: float = 0.5, alpha: float = 0.05) -> Table4Row:
    """Full classification summary for one evaluation set."""
    y, s = check_eval_set(labels, scores)
    tm = threshold_metrics(confusion(y, s, threshold))
    lo, hi = mcc_interval(tm.mcc, y.size, alpha)
    return Table4Row(
        accuracy=tm.accuracy,
        auroc=auroc(y, s),
        auprc=auprc(y, s),
        sensitivity=tm.recall,
        precision=tm.precision,
        f_score=tm.f_score,
        mcc=tm.mcc,
        mcc_ci_low=lo,
        mcc_ci_high=hi,
    )


def read_scores_csv(path):
    """Read a ``label,score`` CSV into ``(labels, scores)`` arrays."""
    labels, scores = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"label", "score"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'label,score'")
        for lineno, row in enumerate(reader, start=2):
            try:
                labels.append(int(row["label"]))
                scores.append(float(row["score"]))
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from None
    return check_eval_set(labels, scores)
