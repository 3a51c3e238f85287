"""Data container, CUSUM fields and marginal scale estimators.

All CUSUM fields are computed from prefix sums of column-centered data, so the
cost is a single O(np) pass regardless of the weighting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ClippedVarianceWarning, DegenerateColumnError, InputError

__all__ = [
    "DataMatrix",
    "ScaleEstimates",
    "CusumField",
    "as_data_matrix",
    "compute_cusum_field",
    "difference_variance",
    "bartlett_variance",
    "default_bandwidth",
]

GAMMAS = (0.0, 0.5)
MIN_ROWS = 4
# Below this length plain np.cumsum is accurate enough.
_BLOCKED_CUMSUM_MIN_N = 10_000
_CUMSUM_BLOCK = 256


@dataclass(frozen=True)
class DataMatrix:
    """An ``n x p`` observation matrix with rows indexed by time.

    A 1-D input is treated as a single series (``p = 1``).
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise InputError(f"expected a 2-D array, got {arr.ndim} dimensions")
        n, p = arr.shape
        if n < MIN_ROWS:
            raise InputError(f"need at least {MIN_ROWS} rows (time points), got {n}")
        if p < 1:
            raise InputError("need at least one column")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise InputError(
                f"non-finite value at row {bad[0] + 1}, column {bad[1] + 1}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def as_data_matrix(X) -> DataMatrix:
    """Return ``X`` as a validated :class:`DataMatrix` (no copy if it already is one)."""
    if isinstance(X, DataMatrix):
        return X
    return DataMatrix(X)


@dataclass(frozen=True)
class ScaleEstimates:
    """Per-column scale estimates ``sigma_hat`` (standard deviations, not variances).

    ``kind`` is one of ``"difference"``, ``"bartlett"`` or ``"exact"``; the
    latter is for injecting known scales in simulations and tests.
    """

    sigma_hat: np.ndarray
    kind: str = "exact"
    bandwidth: int | None = None
    clipped: tuple = field(default=())

    def __post_init__(self):
        sig = np.atleast_1d(np.asarray(self.sigma_hat, dtype=np.float64))
        if sig.ndim != 1:
            raise InputError("sigma_hat must be one-dimensional")
        if not np.all(np.isfinite(sig)):
            raise InputError("sigma_hat must be finite")
        bad = np.flatnonzero(sig <= 0)
        if bad.size:
            raise DegenerateColumnError(bad + 1)
        sig.setflags(write=False)
        object.__setattr__(self, "sigma_hat", sig)

    @classmethod
    def exact(cls, sigma, p: int | None = None) -> "ScaleEstimates":
        """Known scales; a scalar is broadcast to ``p`` columns."""
        sig = np.asarray(sigma, dtype=np.float64)
        if sig.ndim == 0:
            if p is None:
                raise ValueError("p is required when sigma is a scalar")
            sig = np.full(p, float(sig))
        return cls(sig, kind="exact")

    @property
    def p(self) -> int:
        return self.sigma_hat.shape[0]


@dataclass(frozen=True)
class CusumField:
    """Standardized CUSUM values; row ``k - 1`` holds split ``k = 1, ..., n - 1``."""

    gamma: float
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0] + 1

    @property
    def p(self) -> int:
        return self.values.shape[1]


def _prefix_sums(a: np.ndarray) -> np.ndarray:
    """Column-wise inclusive prefix sums.

    Long series use a two-level blocked scan so rounding error grows with
    ``block + n / block`` rather than with ``n``.
    """
    n = a.shape[0]
    if n < _BLOCKED_CUMSUM_MIN_N:
        return np.cumsum(a, axis=0)
    b = _CUMSUM_BLOCK
    nblocks = -(-n // b)
    padded = np.zeros((nblocks * b,) + a.shape[1:], dtype=a.dtype)
    padded[:n] = a
    blocks = padded.reshape((nblocks, b) + a.shape[1:])
    inner = np.cumsum(blocks, axis=1)
    offsets = np.cumsum(inner[:, -1], axis=0)
    inner[1:] += offsets[:-1][:, None]
    return inner.reshape(padded.shape)[:n]


def compute_cusum_field(X, gamma: float, scales: ScaleEstimates) -> CusumField:
    """CUSUM contrasts for every split ``k`` and column ``j``.

    Entry ``(k, j)`` is ``{(k/n)(1 - k/n)}^(-gamma) * n^(-1/2) *
    (S_kj - (k/n) S_nj) / sigma_hat_j`` where ``S_kj`` is the ``k``-th partial
    sum of column ``j``.

    Parameters
    ----------
    X : DataMatrix or array_like
        ``n x p`` data.
    gamma : {0, 0.5}
        Weighting exponent; 0 is unweighted, 0.5 variance-weighted.
    scales : ScaleEstimates
        Column scales of length ``p``.

    Returns
    -------
    CusumField
    """
    X = as_data_matrix(X)
    gamma = float(gamma)
    if gamma not in GAMMAS:
        raise ValueError(f"gamma must be 0 or 0.5, got {gamma}")
    if scales.p != X.p:
        raise InputError(f"scales have length {scales.p} but data has {X.p} columns")
    n = X.n
    # S_k - (k/n) S_n is the partial sum of the centered series.
    centered = X.values - X.values.mean(axis=0)
    vals = _prefix_sums(centered)[:-1]
    vals *= 1.0 / np.sqrt(n)
    vals /= scales.sigma_hat
    if gamma == 0.5:
        t = np.arange(1, n) / n
        vals *= (1.0 / np.sqrt(t * (1.0 - t)))[:, None]
    return CusumField(gamma=gamma, values=vals)


def difference_variance(X) -> ScaleEstimates:
    """Difference-based scale estimates.

    ``sigma_hat_j^2 = {2(n-1)}^(-1) sum_{i=2}^n (X_ij - X_{i-1,j})^2``; robust
    to a single mean shift, which only contributes one term.

    Raises
    ------
    DegenerateColumnError
        If some column has identical consecutive values throughout.
    """
    X = as_data_matrix(X)
    d = np.diff(X.values, axis=0)
    var = np.einsum("ij,ij->j", d, d) / (2.0 * (X.n - 1))
    bad = np.flatnonzero(var <= 0)
    if bad.size:
        raise DegenerateColumnError(bad + 1, "difference-based variance")
    return ScaleEstimates(np.sqrt(var), kind="difference")


def default_bandwidth(n: int) -> int:
    """Default lag window ``floor(n^(1/3))``, at least 1."""
    # integer cube root, guarding against float rounding at perfect cubes
    b = int(round(n ** (1.0 / 3.0)))
    while b**3 > n:
        b -= 1
    while (b + 1) ** 3 <= n:
        b += 1
    return max(1, b)


def bartlett_variance(X, b_n: int | None = None, kernel: str = "flat") -> ScaleEstimates:
    """Lag-window long-run variance estimates.

    ``sigma_hat_j^2 = sum_{|l| <= b_n} w_l (n - |l|)^(-1)
    sum_{i=|l|+1}^{n} (X_ij - Xbar_j)(X_{i-|l|,j} - Xbar_j)``.

    Parameters
    ----------
    X : DataMatrix or array_like
    b_n : int, optional
        Largest lag, ``1 <= b_n < n``. Defaults to ``floor(n^(1/3))``.
    kernel : {"flat", "bartlett"}
        ``"flat"`` uses unit weights for every lag up to ``b_n``;
        ``"bartlett"`` uses the triangular weights ``1 - |l| / (b_n + 1)``.

    Notes
    -----
    Non-positive estimates are clipped to ``1e-12`` times the column sample
    variance and a :class:`ClippedVarianceWarning` is issued; the clipped
    column indices are kept on the returned object.
    """
    X = as_data_matrix(X)
    n = X.n
    if b_n is None:
        b_n = default_bandwidth(n)
    b_n = int(b_n)
    if not 1 <= b_n < n:
        raise ValueError(f"bandwidth b_n must satisfy 1 <= b_n < n={n}, got {b_n}")
    if kernel not in ("flat", "bartlett"):
        raise ValueError(f"unknown kernel {kernel!r}")
    c = X.values - X.values.mean(axis=0)
    gamma0 = np.einsum("ij,ij->j", c, c) / n
    bad = np.flatnonzero(gamma0 <= 0)
    if bad.size:
        raise DegenerateColumnError(bad + 1, "sample variance")
    var = gamma0.copy()
    for lag in range(1, b_n + 1):
        w = 1.0 if kernel == "flat" else 1.0 - lag / (b_n + 1.0)
        acov = np.einsum("ij,ij->j", c[lag:], c[:-lag]) / (n - lag)
        var += 2.0 * w * acov
    floor = 1e-12 * gamma0
    clipped = np.flatnonzero(var <= floor)
    if clipped.size:
        warnings.warn(
            f"long-run variance non-positive in {clipped.size} column(s) "
            f"(first: column {clipped[0] + 1}); clipped to a small floor",
            ClippedVarianceWarning,
            stacklevel=2,
        )
        var[clipped] = floor[clipped]
    return ScaleEstimates(
        np.sqrt(var), kind="bartlett", bandwidth=b_n, clipped=tuple(int(i) for i in clipped)
    )
