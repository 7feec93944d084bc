"""The scoring rules on toy inputs, checked against their slow definitions.

Run: python3 demos/02_scoring_rules.py
"""

import numpy as np

from cspool.scoring import coverage, crps_empirical, interval_width, mql_normalized, pinball

x = np.random.default_rng(1).normal(size=100)
y = 0.4

# CRPS: the sorted formula against the O(B^2) pairwise definition.
slow = np.mean(np.abs(x - y)) - np.abs(x[:, None] - x[None, :]).sum() / (2 * x.size**2)
print(f"CRPS sorted {crps_empirical(x, y):.12f}  pairwise {slow:.12f}")
print(f"fair CRPS   {crps_empirical(x, y, fair=True):.12f}")

# Twice the average pinball loss over a fine grid approaches CRPS.
levels = np.arange(1, 200) / 200
q = np.quantile(x, levels)
bridge = np.mean([2 * pinball(y, qi, a) for qi, a in zip(q, levels)])
print(f"2 x mean pinball over 199 levels {bridge:.4f}  (CRPS {crps_empirical(x, y):.4f})")

# Window-level metrics on a 3-step horizon.
S = np.stack([x, x + 1, x - 1])
target = np.array([0.4, 3.5, -1.0])
print(f"normalised MQL {mql_normalized(S, target):.4f}")
print(f"95% coverage {coverage(S, target):.3f}  mean width {interval_width(S):.3f}")
