"""
How close are the limit laws?
=============================

Draw null panels, normalize the max statistics and compare them with the
standard Gumbel law, and the studentized sum statistic with N(0, 1).
The last lines show how strongly the max and sum p-values co-move at this
sample size.
"""

import sys

from dms_changepoint.simulation import ScenarioConfig, null_calibration

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 500

cfg = ScenarioConfig(500, 200, covariance="identity", seed=20240523)
cal = null_calibration(cfg, reps)
print(f"KS(2M^2 - log 2p, Gumbel)   = {cal.ks_gumbel_max0:.3f}")
print(f"KS(A M-dagger - D, Gumbel)  = {cal.ks_gumbel_max05:.3f}")
print(f"KS(z_sum, normal)           = {cal.ks_normal_sum:.3f}")

###############################################################################
# Injecting the true unit scales removes the estimation noise in sigma-hat.
exact = null_calibration(cfg, reps, scales="exact")
print(f"with true scales: KS(M) = {exact.ks_gumbel_max0:.3f}, "
      f"KS(M-dagger) = {exact.ks_gumbel_max05:.3f}")

###############################################################################
# Dependence between the two p-values under the null.
print(f"corr(p_max0, p_sum)  = {cal.corr_max0_sum:.3f}")
print(f"corr(p_max05, p_sum) = {cal.corr_max05_sum:.3f}")
