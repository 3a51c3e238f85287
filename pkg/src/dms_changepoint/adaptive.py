"""Adaptive combination of the max and sum tests.

The max- and sum-type statistics are asymptotically independent under the
null, so their p-values can be merged with Fisher's method (chi-square with
4 degrees of freedom) or by the minimum p-value. The power-enhanced sum
statistic of Wang, Zou, Wang and Yin (WZWY) is included as a benchmark.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.stats import norm

from .core_stats import ScaleEstimates, as_data_matrix, compute_cusum_field, difference_variance
from .exceptions import CalibrationError, ClampedPValueWarning
from .max_test import (
    PVALUE_FLOOR,
    MaxTestReport,
    default_lambda,
    max_stat_unweighted,
    max_stat_weighted,
    pvalue_max_unweighted,
    pvalue_max_weighted,
)
from .sum_test import SumTestReport, sum_test

__all__ = [
    "METHODS",
    "METHOD_LABELS",
    "DmsReport",
    "fisher_combine",
    "fisher_statistic",
    "minp_combine",
    "wzwy_threshold",
    "wzwy_stat",
    "dms_test",
    "method_pvalues",
]

METHODS = ("max0", "dms0", "max05", "sum", "wzwy", "dms05")
METHOD_LABELS = {
    "max0": "Max(0)",
    "dms0": "DMS(0)",
    "max05": "Max(0.5)",
    "sum": "Sum",
    "wzwy": "WZWY",
    "dms05": "DMS(0.5)",
}
WZWY_C = 100.0


def _check_p(pv: float, name: str) -> float:
    pv = float(pv)
    if not 0.0 <= pv <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {pv}")
    if pv == 0.0:
        warnings.warn(f"{name} is 0; clamped to {PVALUE_FLOOR}", ClampedPValueWarning, stacklevel=3)
        pv = PVALUE_FLOOR
    return pv


def fisher_statistic(p1: float, p2: float) -> float:
    """``-2 (log p1 + log p2)``."""
    p1 = _check_p(p1, "p1")
    p2 = _check_p(p2, "p2")
    return -2.0 * (math.log(p1) + math.log(p2))


def fisher_combine(p1: float, p2: float) -> float:
    """Fisher combination of two independent p-values.

    The chi-square(4) survival function has the closed form
    ``exp(-x/2) (1 + x/2)``.
    """
    x = fisher_statistic(p1, p2)
    return float(min(1.0, math.exp(-x / 2.0) * (1.0 + x / 2.0)))


def minp_combine(p1: float, p2: float) -> float:
    """Exact p-value of the minimum of two independent uniforms, ``1 - (1 - m)^2``."""
    m = min(float(p1), float(p2))
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    return m * (2.0 - m)


def wzwy_threshold(n: int, p: int) -> float:
    """Default indicator threshold ``sqrt({2 log(np)}^1.1)``."""
    return math.sqrt((2.0 * math.log(n * p)) ** 1.1)


def wzwy_stat(S: float, V: float, M_dag: float, n: int, p: int,
              c_np: float = WZWY_C, h_np: float | None = None) -> float:
    """Power-enhanced sum statistic.

    ``(S - (n+2)p) / sqrt(V) + c_np * sqrt(V) * 1{M_dag > h_np}``; compare
    with upper standard normal quantiles.
    """
    if not V > 0:
        raise CalibrationError(f"variance must be positive, got {V}")
    if h_np is None:
        h_np = wzwy_threshold(n, p)
    sd = math.sqrt(V)
    z = (S - (n + 2.0) * p) / sd
    if M_dag > h_np:
        z += c_np * sd
    return z


@dataclass(frozen=True)
class DmsReport:
    """Result of the adaptive test.

    ``status`` is ``"ok"`` or ``"combination_unavailable"``; in the latter
    case the sum-test plug-in variance failed, the sum and combined fields
    are ``None`` and ``message`` says why.
    """

    variant: str
    alpha: float
    p_max: float
    p_sum: float | None
    fisher_stat: float | None
    p_combined: float | None
    decision: bool | None
    max_report: MaxTestReport
    sum_report: SumTestReport | None
    status: str = "ok"
    message: str = ""

    @property
    def n(self) -> int:
        return self.max_report.n

    @property
    def p(self) -> int:
        return self.max_report.p

    def to_dict(self) -> dict:
        return {
            "method": self.variant,
            "status": self.status,
            "message": self.message,
            "n": self.n,
            "p": self.p,
            "alpha": self.alpha,
            "p_max": self.p_max,
            "p_sum": self.p_sum,
            "fisher_stat": self.fisher_stat,
            "p_combined": self.p_combined,
            "decision": self.decision,
            "max_test": self.max_report.to_dict(),
            "sum_test": None if self.sum_report is None else self.sum_report.to_dict(),
        }


def dms_test(X, variant: str = "dms05", lambda_n: int | None = None, alpha: float = 0.05,
             scales: ScaleEstimates | None = None) -> DmsReport:
    """Double-max-sum test for a single mean change.

    Parameters
    ----------
    X : DataMatrix or array_like
        ``n x p`` data, rows in time order.
    variant : {"dms0", "dms05"}
        ``"dms0"`` pairs the unweighted max over all splits with the sum test;
        ``"dms05"`` uses the weighted max over ``lambda_n <= k <= n - lambda_n``.
    lambda_n : int, optional
        Boundary removal for ``"dms05"``; defaults to ``floor(0.2 n)``.
    alpha : float
        Level used for ``decision``.
    scales : ScaleEstimates, optional
        Defaults to difference-based estimates.
    """
    X = as_data_matrix(X)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if scales is None:
        scales = difference_variance(X)
    n, p = X.n, X.p
    field05 = compute_cusum_field(X, 0.5, scales)
    if variant == "dms0":
        M = max_stat_unweighted(compute_cusum_field(X, 0.0, scales))
        max_report = MaxTestReport(M, "unweighted_gamma0", pvalue_max_unweighted(M, p), n, p)
    elif variant == "dms05":
        if lambda_n is None:
            lambda_n = default_lambda(n)
        M = max_stat_weighted(field05, lambda_n)
        max_report = MaxTestReport(
            M, "weighted_gamma05", pvalue_max_weighted(M, p, n, lambda_n), n, p, int(lambda_n)
        )
    else:
        raise ValueError(f"unknown DMS variant {variant!r}")
    try:
        sum_report = sum_test(X, field=field05)
    except CalibrationError as exc:
        return DmsReport(variant, alpha, max_report.p_value, None, None, None, None,
                         max_report, None, status="combination_unavailable", message=str(exc))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampedPValueWarning)
        fs = fisher_statistic(max_report.p_value, sum_report.p_value)
        pc = fisher_combine(max_report.p_value, sum_report.p_value)
    return DmsReport(variant, alpha, max_report.p_value, sum_report.p_value, fs, pc,
                     bool(pc < alpha), max_report, sum_report)


def method_pvalues(X, methods=METHODS, lambda_n: int | None = None,
                   scales: ScaleEstimates | None = None) -> dict:
    """p-values of several methods on one dataset, sharing intermediate work.

    Returns a dict ``method -> p-value``; a method whose calibration failed
    maps to ``None``. The weighted max, WZWY and DMS(0.5) share one
    ``lambda_n`` (default ``floor(0.2 n)``).
    """
    X = as_data_matrix(X)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    methods = tuple(methods)
    n, p = X.n, X.p
    if scales is None:
        scales = difference_variance(X)
    if lambda_n is None:
        lambda_n = default_lambda(n)
    out = {}
    need = set(methods)
    pm0 = pm05 = M_dag = None
    field05 = None
    if need & {"sum", "wzwy", "dms0", "dms05", "max05"}:
        field05 = compute_cusum_field(X, 0.5, scales)
    if need & {"max0", "dms0"}:
        pm0 = pvalue_max_unweighted(max_stat_unweighted(compute_cusum_field(X, 0.0, scales)), p)
    if need & {"max05", "dms05", "wzwy"}:
        M_dag = max_stat_weighted(field05, lambda_n)
        if need & {"max05", "dms05"}:
            pm05 = pvalue_max_weighted(M_dag, p, n, lambda_n)
    srep = None
    if need & {"sum", "wzwy", "dms0", "dms05"}:
        try:
            srep = sum_test(X, field=field05)
        except CalibrationError:
            srep = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampedPValueWarning)
        for m in methods:
            if m == "max0":
                out[m] = pm0
            elif m == "max05":
                out[m] = pm05
            elif srep is None:
                out[m] = None
            elif m == "sum":
                out[m] = srep.p_value
            elif m == "wzwy":
                z = wzwy_stat(srep.statistic_raw, srep.variance_hat, M_dag, n, p)
                out[m] = float(norm.sf(z))
            elif m == "dms0":
                out[m] = fisher_combine(pm0, srep.p_value)
            elif m == "dms05":
                out[m] = fisher_combine(pm05, srep.p_value)
    return out

