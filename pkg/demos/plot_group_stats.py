"""
Comparing four groups of scores
===============================

One-way ANOVA, Levene's test for equal variances, then Tukey HSD to see
which pairs differ.
"""
import numpy as np

from blockfuse.stats import GroupData, levene, one_way_anova, tukey_hsd

rng = np.random.default_rng(7)
means = {"model_a": 0.90, "model_b": 0.91, "model_c": 0.93, "ensemble": 0.95}
g = GroupData.from_lists(*[rng.normal(mu, 0.02, 27) for mu in means.values()],
                         names=list(means))

anova = one_way_anova(g)
print(anova.summary())

lev = levene(g)
print(f"Levene W={lev.w_stat:.3f}, p={lev.p_value:.3f}")

for pair in tukey_hsd(g, alpha=0.05):
    flag = "*" if pair.significant else " "
    print(f"{flag} {pair.group_a:>8} vs {pair.group_b:<8} diff {pair.mean_diff:+.4f}  "
          f"q {pair.q_stat:6.3f}  p {pair.p_adj:.4f}")
