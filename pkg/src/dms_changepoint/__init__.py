"""Adaptive max/sum changepoint tests for high-dimensional mean changes."""

from .adaptive import (
    METHOD_LABELS,
    METHODS,
    DmsReport,
    dms_test,
    fisher_combine,
    method_pvalues,
    minp_combine,
    wzwy_stat,
)
from .core_stats import (
    CusumField,
    DataMatrix,
    ScaleEstimates,
    bartlett_variance,
    compute_cusum_field,
    difference_variance,
)
from .exceptions import (
    CalibrationError,
    ConfigError,
    DegenerateColumnError,
    DMSError,
    InputError,
)
from .max_test import MaxTestReport, max_test, pvalue_max_unweighted, pvalue_max_weighted
from .simulation import (
    ScenarioConfig,
    generate_dataset,
    null_calibration,
    run_power_experiment,
    run_size_experiment,
    scenario,
)
from .sum_test import SumTestReport, sum_test

__version__ = "0.1.0"

__all__ = [
    "METHOD_LABELS", "METHODS", "DmsReport", "dms_test", "fisher_combine", "method_pvalues",
    "minp_combine", "wzwy_stat",
    "CusumField", "DataMatrix", "ScaleEstimates", "bartlett_variance", "compute_cusum_field",
    "difference_variance",
    "CalibrationError", "ConfigError", "DegenerateColumnError", "DMSError", "InputError",
    "MaxTestReport", "max_test", "pvalue_max_unweighted", "pvalue_max_weighted",
    "ScenarioConfig", "generate_dataset", "null_calibration", "run_power_experiment",
    "run_size_experiment", "scenario",
    "SumTestReport", "sum_test",
]
