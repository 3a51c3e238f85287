"""
Power against sparsity
======================

Fix the total squared signal at 2 and spread it over k columns. The max test
wins when k is small, the sum test when k is large, and the combined test
tracks the better of the two.
"""

import sys

from dms_changepoint.simulation import run_power_experiment, scenario

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 300
methods = ("max0", "sum", "dms0")

grid = [scenario("I", 200, 200, tau_frac=0.5, sparsity_k=k, delta_norm_sq=2.0, seed=20240522)
        for k in (1, 2, 5, 10, 25, 50)]
results = run_power_experiment(grid, methods, reps=reps)

print(f"{'k':>4} " + " ".join(f"{m:>7}" for m in methods))
for cfg, res in zip(grid, results):
    print(f"{cfg.sparsity_k:>4} " + " ".join(f"{100 * res.rate(m):6.1f}%" for m in methods))
