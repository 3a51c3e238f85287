"""Sum-of-squares statistic over all splits and its Gaussian calibration.

The variance of the statistic is estimated by plugging difference-based
estimates of ``tr(R^2)`` and ``E(eps' R eps)^2`` into the asymptotic formula.
Those estimators standardize each coordinate by a leave-rows-out
difference-based variance, computed here for every window in O(np).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .core_stats import (
    CusumField,
    ScaleEstimates,
    as_data_matrix,
    compute_cusum_field,
    difference_variance,
)
from .exceptions import CalibrationError, DegenerateColumnError

__all__ = [
    "SumTestReport",
    "sum_stat",
    "leave_out_variances",
    "trace_r2_hat",
    "eps_quad_hat",
    "variance_vnp",
    "pvalue_sum",
    "sum_test",
]

_COEF_N2 = (2.0 * math.pi**2 - 18.0) / 3.0
_COEF_N = (15.0 - math.pi**2) / 3.0


def sum_stat(C: CusumField) -> float:
    """``sum_k sum_j C_{0.5,j}(k)^2`` over every split ``k = 1..n-1``."""
    if C.gamma != 0.5:
        raise ValueError("sum statistic needs a gamma = 0.5 field")
    v = C.values.ravel()
    return float(np.dot(v, v))


def leave_out_variances(X, width: int, straddle: bool = False) -> np.ndarray:
    """Difference-based variances with a window of ``width`` rows left out.

    Row ``s`` of the result (0-based) excludes the time points
    ``s+1, ..., s+width`` (1-based). The variance of column ``j`` is
    ``{2|A|}^(-1) sum_{i in A} (X_ij - X_{i-1,j})^2`` with
    ``A = {2..n}`` minus the excluded points.

    With ``straddle=True`` the difference that starts at the last excluded
    row is dropped as well, so no retained difference touches an excluded row.

    Returns
    -------
    ndarray of shape ``(n - width + 1, p)``
    """
    X = as_data_matrix(X)
    n = X.n
    if not 1 <= width <= n - 1:
        raise ValueError(f"width must be in [1, n-1], got {width}")
    d = np.diff(X.values, axis=0)
    d2 = d * d
    total = d2.sum(axis=0)
    # e[r] = squared difference ending at 0-based row r, zero outside 1..n-1
    e = np.zeros((n + 1, X.p))
    e[1:n] = d2
    inside = np.zeros(n + 1)
    inside[1:n] = 1.0
    nwin = n - width + 1
    span = width + 1 if straddle else width
    excluded = np.zeros((nwin, X.p))
    count = np.full(nwin, float(n - 1))
    for t in range(span):
        excluded += e[t : t + nwin]
        count -= inside[t : t + nwin]
    if np.any(count <= 0):
        raise CalibrationError(f"n={n} is too short to leave out {span} rows and keep a difference")
    var = (total - excluded) / (2.0 * count)[:, None]
    bad = np.flatnonzero(np.any(var <= 0, axis=0))
    if bad.size:
        raise DegenerateColumnError(bad + 1, "leave-out difference variance")
    return var


def trace_r2_hat(X, straddle: bool = False) -> float:
    """Estimate ``tr(R^2)`` from lag-two products of standardized differences.

    ``{4(n-3)}^(-1) sum_{i=1}^{n-3} {(X_i - X_{i+1})' D_i^(-1) (X_{i+2} - X_{i+3})}^2``
    where ``D_i`` holds the variances with rows ``i..i+3`` left out.
    """
    X = as_data_matrix(X)
    n, x = X.n, X.values
    D = leave_out_variances(X, 4, straddle=straddle)
    a = x[:-3] - x[1:-2]
    c = x[2:-1] - x[3:]
    q = np.einsum("ij,ij->i", a * c, 1.0 / D)
    return float(np.dot(q, q) / (4.0 * (n - 3)))


def eps_quad_hat(X, straddle: bool = False, trR2: float | None = None) -> float:
    """Estimate ``E(eps' R eps)^2`` from adjacent standardized differences.

    ``(n-2)^(-1) sum_{i=1}^{n-2} {(X_i - X_{i+1})' D_i^(-1) (X_{i+1} - X_{i+2})}^2
    - 3 tr(R^2)-hat``. Pass ``trR2`` to reuse an existing trace estimate.
    """
    X = as_data_matrix(X)
    n, x = X.n, X.values
    if trR2 is None:
        trR2 = trace_r2_hat(X, straddle=straddle)
    D = leave_out_variances(X, 3, straddle=straddle)
    a = x[:-2] - x[1:-1]
    b = x[1:-1] - x[2:]
    q = np.einsum("ij,ij->i", a * b, 1.0 / D)
    return float(np.dot(q, q) / (n - 2) - 3.0 * trR2)


def variance_vnp(n: int, p: int, trR2: float, eps_quad: float) -> float:
    """Plug-in variance of the sum statistic.

    ``(2 pi^2 - 18)/3 n^2 trR2 + (15 - pi^2)/3 n (eps_quad - p^2)``.

    Raises
    ------
    CalibrationError
        If ``trR2 <= 0`` or the combination is not positive.
    """
    if not trR2 > 0:
        raise CalibrationError(f"tr(R^2) estimate must be positive, got {trR2}")
    V = _COEF_N2 * n * n * trR2 + _COEF_N * n * (eps_quad - float(p) ** 2)
    if not V > 0:
        raise CalibrationError(
            f"plug-in variance is not positive (V={V:.6g}; trR2={trR2:.6g}, "
            f"eps_quad={eps_quad:.6g})"
        )
    return float(V)


def pvalue_sum(S: float, n: int, p: int, V: float) -> float:
    """Upper-tail normal p-value of ``(S - (n+2)p) / sqrt(V)``."""
    if not V > 0:
        raise CalibrationError(f"variance must be positive, got {V}")
    z = (S - (n + 2.0) * p) / math.sqrt(V)
    return float(norm.sf(z))


@dataclass(frozen=True)
class SumTestReport:
    statistic_raw: float
    centering: float
    variance_hat: float
    z_value: float
    p_value: float
    trR2_hat: float
    eps_quad_hat: float
    n: int
    p: int

    def to_dict(self) -> dict:
        return asdict(self)


def sum_test(X, scales: ScaleEstimates | None = None, straddle: bool = False,
             field: CusumField | None = None) -> SumTestReport:
    """Run the sum test on raw data.

    ``field`` may be a precomputed gamma = 0.5 CUSUM field for ``X``.
    """
    X = as_data_matrix(X)
    n, p = X.n, X.p
    if field is None:
        if scales is None:
            scales = difference_variance(X)
        field = compute_cusum_field(X, 0.5, scales)
    S = sum_stat(field)
    tr = trace_r2_hat(X, straddle=straddle)
    eq = eps_quad_hat(X, straddle=straddle, trR2=tr)
    V = variance_vnp(n, p, tr, eq)
    centering = (n + 2.0) * p
    z = (S - centering) / math.sqrt(V)
    return SumTestReport(S, centering, V, z, float(norm.sf(z)), tr, eq, n, p)
