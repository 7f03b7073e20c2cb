"""
Evaluating a binary classifier
==============================

Threshold metrics, ranking metrics and an exact interval for the MCC
from a vector of labels and scores.
"""
import numpy as np

from blockfuse.classification import (auprc, auroc, clopper_pearson, confusion, table4_report,
                                      threshold_metrics)

rng = np.random.default_rng(0)
labels = rng.integers(0, 2, 720)
scores = np.clip(0.5 + 0.35 * (labels - 0.5) + 0.15 * rng.standard_normal(720), 0, 1)

# Scores >= threshold count as positive.
counts = confusion(labels, scores, threshold=0.5)
print(counts)
m = threshold_metrics(counts)
print(f"accuracy {m.accuracy:.4f}  recall {m.recall:.4f}  precision {m.precision:.4f}  "
      f"F {m.f_score:.4f}  MCC {m.mcc:.4f}")

# Ranking metrics do not depend on the threshold. Tied scores count half in AUROC.
print("AUROC", auroc(labels, scores), " AUPRC", auprc(labels, scores))

# Exact binomial interval: 7 successes out of 10.
print("Clopper-Pearson 7/10:", clopper_pearson(7, 10, alpha=0.05))

# Everything in one row, MCC interval included.
row = table4_report(labels, scores, threshold=0.5, alpha=0.05)
print(row.csv_header())
print(row.to_csv_row())
