"""Max-type statistics over all splits and dimensions, with Gumbel p-values."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core_stats import (
    CusumField,
    ScaleEstimates,
    as_data_matrix,
    compute_cusum_field,
    difference_variance,
)
from .exceptions import CalibrationError

__all__ = [
    "MaxTestReport",
    "default_lambda",
    "max_stat_unweighted",
    "max_stat_weighted",
    "pvalue_max_unweighted",
    "pvalue_max_weighted",
    "weighted_normalizers",
    "gumbel_cdf",
    "gumbel_logsf",
    "max_test",
]

PVALUE_FLOOR = 1e-300


def gumbel_cdf(x):
    """Standard Gumbel CDF ``exp(-exp(-x))``."""
    return np.exp(-np.exp(-np.asarray(x, dtype=float)))


def gumbel_logsf(x: float) -> float:
    """``log(1 - G(x))`` without cancellation for large ``x``."""
    x = float(x)
    if x > 30.0:
        # 1 - exp(-e) = e - e^2/2 + ..., e = exp(-x)
        e = math.exp(-x)
        return -x + math.log1p(-e / 2.0)
    return math.log(-math.expm1(-math.exp(-x)))


def _pvalue_from_logsf(logsf: float) -> float:
    return min(1.0, max(PVALUE_FLOOR, math.exp(logsf)))


def default_lambda(n: int) -> int:
    """Boundary removal ``floor(0.2 n)``, at least 1 (40 for ``n = 200``)."""
    return max(1, int(math.floor(0.2 * n)))


def _check_lambda(lambda_n: int, n: int) -> int:
    if int(lambda_n) != lambda_n:
        raise ValueError(f"lambda_n must be an integer, got {lambda_n}")
    lambda_n = int(lambda_n)
    if not 1 <= lambda_n <= n / 2:
        raise ValueError(f"lambda_n must satisfy 1 <= lambda_n <= n/2 = {n / 2}, got {lambda_n}")
    return lambda_n


def max_stat_unweighted(C: CusumField) -> float:
    """``max_k max_j |C_{0,j}(k)|`` over all splits ``k = 1..n-1``."""
    if C.gamma != 0.0:
        raise ValueError("unweighted max statistic needs a gamma = 0 field")
    return float(np.max(np.abs(C.values)))


def max_stat_weighted(C: CusumField, lambda_n: int) -> float:
    """``max |C_{0.5,j}(k)|`` over ``lambda_n <= k <= n - lambda_n`` and all ``j``."""
    if C.gamma != 0.5:
        raise ValueError("weighted max statistic needs a gamma = 0.5 field")
    n = C.n
    lambda_n = _check_lambda(lambda_n, n)
    # row index k-1 for k = lambda_n .. n - lambda_n
    window = C.values[lambda_n - 1 : n - lambda_n]
    return float(np.max(np.abs(window)))


def pvalue_max_unweighted(M: float, p: int) -> float:
    """Gumbel p-value ``1 - G(2 M^2 - log(2p))`` of the unweighted max statistic."""
    if p < 1:
        raise ValueError("p must be >= 1")
    x = 2.0 * float(M) ** 2 - math.log(2.0 * p)
    return _pvalue_from_logsf(gumbel_logsf(x))


def weighted_normalizers(p: int, n: int, lambda_n: int) -> tuple[float, float, float]:
    """Return ``(h_n, A, D)`` for the weighted max statistic.

    ``h_n = (n / lambda_n - 1)^2`` and, with ``y = p log h_n``,
    ``A = sqrt(2 log y)``, ``D = 2 log y + log(log y) / 2 - log(pi) / 2``.

    Raises
    ------
    CalibrationError
        If ``lambda_n >= n/2`` (so ``h_n <= 1``) or ``y <= 1``.
    """
    lambda_n = int(lambda_n)
    if lambda_n < 1:
        raise ValueError("lambda_n must be >= 1")
    if 2 * lambda_n >= n:
        raise CalibrationError(
            f"weighted max calibration needs lambda_n < n/2 (got lambda_n={lambda_n}, n={n})"
        )
    h_n = (n / lambda_n - 1.0) ** 2
    y = p * math.log(h_n)
    if y <= 1.0:
        raise CalibrationError(
            f"weighted max calibration needs p * log(h_n) > 1, got {y:.4g}"
        )
    log_y = math.log(y)
    A = math.sqrt(2.0 * log_y)
    D = 2.0 * log_y + 0.5 * math.log(log_y) - 0.5 * math.log(math.pi)
    return h_n, A, D


def pvalue_max_weighted(M_dag: float, p: int, n: int, lambda_n: int) -> float:
    """Gumbel p-value ``1 - G(A M_dag - D)`` of the weighted, trimmed max statistic."""
    _, A, D = weighted_normalizers(p, n, lambda_n)
    return _pvalue_from_logsf(gumbel_logsf(A * float(M_dag) - D))


@dataclass(frozen=True)
class MaxTestReport:
    statistic: float
    variant: str  # "unweighted_gamma0" | "weighted_gamma05"
    p_value: float
    n: int
    p: int
    lambda_n: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def max_test(X, variant: str = "weighted_gamma05", lambda_n: int | None = None,
             scales: ScaleEstimates | None = None) -> MaxTestReport:
    """Run one of the two max tests on raw data.

    Scales default to :func:`difference_variance`.
    """
    X = as_data_matrix(X)
    if scales is None:
        scales = difference_variance(X)
    if variant == "unweighted_gamma0":
        M = max_stat_unweighted(compute_cusum_field(X, 0.0, scales))
        return MaxTestReport(M, variant, pvalue_max_unweighted(M, X.p), X.n, X.p)
    if variant == "weighted_gamma05":
        if lambda_n is None:
            lambda_n = default_lambda(X.n)
        M = max_stat_weighted(compute_cusum_field(X, 0.5, scales), lambda_n)
        pv = pvalue_max_weighted(M, X.p, X.n, lambda_n)
        return MaxTestReport(M, variant, pv, X.n, X.p, int(lambda_n))
    raise ValueError(f"unknown max-test variant {variant!r}")
