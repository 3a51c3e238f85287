"""
Null rejection rates
====================

Reproduce one row of the size table: 1000 null panels of size 200 x 100,
each method tested at the 5% level.
"""

import sys

from dms_changepoint import METHODS
from dms_changepoint.simulation import results_table, run_size_experiment, scenario, write_results_csv

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 1000

res = run_size_experiment(scenario("I", 200, 100, seed=20240521), METHODS, reps=reps, lambda_n=40)
print(res.summary())

###############################################################################
# Monte Carlo standard errors are close to sqrt(0.05 * 0.95 / reps).
for m in METHODS:
    print(f"  {m:<6} {100 * res.rate(m):5.1f}%  +- {100 * res.stderr(m):.1f}")

###############################################################################
# The same numbers as a flat table, ready for a spreadsheet.
print(write_results_csv(results_table([res], timing=False)))
