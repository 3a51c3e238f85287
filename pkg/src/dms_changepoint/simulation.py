"""Data generators and the Monte Carlo engine for size and power studies.

Two noise scenarios are provided:

* ``"I"``  -- Gaussian innovations, AR-type Toeplitz covariance ``0.5^|j-j'|``;
* ``"II"`` -- standardized Student-t(5) innovations, block-diagonal covariance
  with blocks of 5 and within-block correlation 0.5.

Under an alternative the first ``k`` coordinates shift by ``sqrt(Delta/k)``
after time ``tau = floor(tau_frac * n)``.

Every replication draws from its own generator seeded by
``replication_seed(base_seed, r)``, so results do not depend on how
replications are split across workers.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from .adaptive import METHOD_LABELS, METHODS, method_pvalues
from .core_stats import DataMatrix, ScaleEstimates, compute_cusum_field, difference_variance
from .exceptions import CalibrationError, ConfigError, DMSError
from .max_test import (
    default_lambda,
    max_stat_unweighted,
    max_stat_weighted,
    pvalue_max_unweighted,
    pvalue_max_weighted,
    weighted_normalizers,
)
from .sum_test import sum_test

__all__ = [
    "ScenarioConfig",
    "scenario",
    "covariance_matrix",
    "cholesky_factor",
    "generate_dataset",
    "replication_seed",
    "MethodTally",
    "ExperimentResult",
    "run_experiment",
    "run_size_experiment",
    "run_power_experiment",
    "results_table",
    "RESULT_COLUMNS",
    "write_results_csv",
    "write_results_json",
    "null_calibration",
]

log = logging.getLogger(__name__)

COVARIANCES = ("ar_toeplitz", "block_diag", "identity")
NOISES = ("gaussian", "student_t")
SCENARIOS = {
    "I": dict(covariance="ar_toeplitz", noise="gaussian"),
    "II": dict(covariance="block_diag", noise="student_t"),
}
RESULT_COLUMNS = (
    "scenario", "n", "p", "noise", "tau_frac", "k", "delta", "method", "alpha",
    "reps", "rejections", "rate", "stderr", "errors", "seconds_total",
)
_CHUNK = 25


@dataclass(frozen=True)
class ScenarioConfig:
    """Generative specification of one simulated experiment cell.

    ``delta_norm_sq`` is the squared norm of the mean shift; zero means the
    null. ``seed`` is the base seed (a single dataset uses it directly).
    """

    n: int
    p: int
    covariance: str = "ar_toeplitz"
    noise: str = "gaussian"
    tau_frac: float = 1.0
    sparsity_k: int = 0
    delta_norm_sq: float = 0.0
    seed: int = 0
    rho: float = 0.5
    block: int = 5
    offdiag: float = 0.5
    df: float = 5.0
    name: str = ""

    def __post_init__(self):
        if self.n < 4:
            raise ConfigError(f"n must be >= 4, got {self.n}")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if self.covariance not in COVARIANCES:
            raise ConfigError(f"covariance must be one of {COVARIANCES}, got {self.covariance!r}")
        if self.noise not in NOISES:
            raise ConfigError(f"noise must be one of {NOISES}, got {self.noise!r}")
        if not 0.0 < self.tau_frac <= 1.0:
            raise ConfigError(f"tau_frac must lie in (0, 1], got {self.tau_frac}")
        if not 0 <= self.sparsity_k <= self.p:
            raise ConfigError(f"sparsity k={self.sparsity_k} must lie in [0, p={self.p}]")
        if self.delta_norm_sq < 0:
            raise ConfigError("delta_norm_sq must be >= 0")
        if self.delta_norm_sq > 0 and self.sparsity_k < 1:
            raise ConfigError("a non-zero signal needs sparsity k >= 1")
        if self.noise == "student_t" and not self.df > 2:
            raise ConfigError("Student-t noise needs df > 2 for a finite variance")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.covariance == "block_diag" and not -0.25 < self.offdiag < 1:
            raise ConfigError("block correlation must keep the covariance positive definite")

    @property
    def tau(self) -> int:
        return int(math.floor(self.tau_frac * self.n))

    @property
    def is_null(self) -> bool:
        return self.delta_norm_sq == 0 or self.tau >= self.n

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        for key, spec in SCENARIOS.items():
            if self.covariance == spec["covariance"] and self.noise == spec["noise"]:
                return key
        return f"{self.covariance}/{self.noise}"


def scenario(name: str, n: int, p: int, **kwargs) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` for scenario ``"I"`` or ``"II"``."""
    try:
        base = SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIOS)}") from None
    return ScenarioConfig(n=n, p=p, name=name, **{**base, **kwargs})


def covariance_matrix(covariance: str, p: int, rho: float = 0.5, block: int = 5,
                      offdiag: float = 0.5) -> np.ndarray:
    """Noise covariance for one of the supported families.

    ``block_diag`` correlates coordinates within consecutive blocks of
    ``block``; a trailing partial block (``p % block`` coordinates) stays
    uncorrelated.
    """
    if covariance == "identity":
        return np.eye(p)
    if covariance == "ar_toeplitz":
        idx = np.arange(p)
        return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    if covariance == "block_diag":
        sigma = np.eye(p)
        for b in range(p // block):
            sl = slice(b * block, (b + 1) * block)
            sigma[sl, sl] = offdiag
            sigma[sl, sl] += (1.0 - offdiag) * np.eye(block)
        return sigma
    raise ConfigError(f"unknown covariance {covariance!r}")


@functools.lru_cache(maxsize=32)
def _cached_cholesky(covariance, p, rho, block, offdiag):
    sigma = covariance_matrix(covariance, p, rho, block, offdiag)
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(f"covariance {covariance!r} is not positive definite for p={p}") from exc
    L.setflags(write=False)
    return L


def cholesky_factor(cfg: ScenarioConfig) -> np.ndarray:
    """Lower Cholesky factor of the noise covariance (cached, read-only)."""
    return _cached_cholesky(cfg.covariance, cfg.p, float(cfg.rho), int(cfg.block), float(cfg.offdiag))


def _innovations(rng: np.random.Generator, cfg: ScenarioConfig) -> np.ndarray:
    shape = (cfg.n, cfg.p)
    if cfg.noise == "gaussian":
        return rng.standard_normal(shape)
    return rng.standard_t(cfg.df, size=shape) / math.sqrt(cfg.df / (cfg.df - 2.0))


def generate_dataset(cfg: ScenarioConfig) -> DataMatrix:
    """Draw one ``n x p`` dataset; deterministic given ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    z = _innovations(rng, cfg)
    if cfg.covariance == "identity":
        x = z
    else:
        x = z @ cholesky_factor(cfg).T
    if cfg.delta_norm_sq > 0:
        x[cfg.tau :, : cfg.sparsity_k] += math.sqrt(cfg.delta_norm_sq / cfg.sparsity_k)
    return DataMatrix(x)


def replication_seed(base_seed: int, index: int) -> int:
    """64-bit seed for replication ``index``, mixed from ``base_seed``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class MethodTally:
    rejections: int = 0
    replications: int = 0
    errors: int = 0

    @property
    def rate(self) -> float:
        return self.rejections / self.replications if self.replications else math.nan

    @property
    def mc_stderr(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.replications) if self.replications else math.nan


@dataclass
class ExperimentResult:
    """Per-method rejection counts for one scenario cell."""

    config: ScenarioConfig
    alpha: float
    reps: int
    lambda_n: int
    tallies: dict
    seconds_total: float = 0.0
    first_index: int = 0

    @property
    def seconds_per_replication(self) -> float:
        return self.seconds_total / self.reps if self.reps else math.nan

    def rate(self, method: str) -> float:
        return self.tallies[method].rate

    def stderr(self, method: str) -> float:
        return self.tallies[method].mc_stderr

    def rows(self, timing: bool = True) -> list:
        cfg = self.config
        out = []
        for m, t in self.tallies.items():
            out.append({
                "scenario": cfg.label,
                "n": cfg.n,
                "p": cfg.p,
                "noise": cfg.noise,
                "tau_frac": cfg.tau_frac,
                "k": cfg.sparsity_k,
                "delta": cfg.delta_norm_sq,
                "method": m,
                "alpha": self.alpha,
                "reps": self.reps,
                "rejections": t.rejections,
                "rate": t.rate,
                "stderr": t.mc_stderr,
                "errors": t.errors,
                "seconds_total": round(self.seconds_total, 3) if timing else None,
            })
        return out

    def summary(self) -> str:
        parts = [f"{METHOD_LABELS.get(m, m)}={100 * t.rate:.1f}%" for m, t in self.tallies.items()]
        return f"{self.config.label} n={self.config.n} p={self.config.p}: " + ", ".join(parts)


def _run_indices(cfg, methods, alpha, lambda_n, indices):
    rej = np.zeros(len(methods), dtype=np.int64)
    err = np.zeros(len(methods), dtype=np.int64)
    for r in indices:
        X = generate_dataset(replace(cfg, seed=replication_seed(cfg.seed, r)))
        try:
            pv = method_pvalues(X, methods, lambda_n=lambda_n)
        except DMSError as exc:
            log.debug("replication %d failed: %s", r, exc)
            err += 1
            continue
        for i, m in enumerate(methods):
            v = pv[m]
            if v is None:
                err[i] += 1
            elif v < alpha:
                rej[i] += 1
    return rej, err


def _chunks(first: int, reps: int, size: int = _CHUNK):
    return [range(s, min(s + size, first + reps)) for s in range(first, first + reps, size)]


def _map(fn, items, threads: int):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def run_experiment(cfg: ScenarioConfig, methods=METHODS, reps: int = 1000, alpha: float = 0.05,
                   lambda_n: int | None = None, threads: int = 1,
                   first_index: int = 0) -> ExperimentResult:
    """Rejection counts of ``methods`` over ``reps`` replications of ``cfg``.

    Replication ``r`` (for ``r`` in ``first_index .. first_index + reps - 1``)
    uses ``replication_seed(cfg.seed, r)``. Replications where a method's
    calibration failed are counted under ``errors`` and excluded from that
    method's denominator.
    """
    methods = tuple(methods)
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ConfigError(f"unknown methods: {sorted(unknown)}")
    if lambda_n is None:
        lambda_n = default_lambda(cfg.n)
    t0 = time.perf_counter()
    parts = _map(lambda idx: _run_indices(cfg, methods, alpha, lambda_n, idx),
                 _chunks(first_index, reps), threads)
    rej = sum(p[0] for p in parts)
    err = sum(p[1] for p in parts)
    tallies = {
        m: MethodTally(int(rej[i]), int(reps - err[i]), int(err[i])) for i, m in enumerate(methods)
    }
    res = ExperimentResult(cfg, alpha, reps, int(lambda_n), tallies,
                           time.perf_counter() - t0, first_index)
    log.info("%s (%.1fs)", res.summary(), res.seconds_total)
    return res


def run_size_experiment(cfg: ScenarioConfig, methods=METHODS, reps: int = 1000,
                        alpha: float = 0.05, **kwargs) -> ExperimentResult:
    """Empirical sizes under a null configuration (``reps >= 100``)."""
    if not cfg.is_null:
        raise ConfigError("size experiments need a null configuration (delta_norm_sq = 0)")
    if reps < 100:
        raise ConfigError(f"size experiments need reps >= 100, got {reps}")
    return run_experiment(cfg, methods, reps, alpha, **kwargs)


def run_power_experiment(grid, methods=METHODS, reps: int = 1000, alpha: float = 0.05,
                         **kwargs) -> list:
    """Empirical power for every cell of ``grid`` (each with a non-zero signal)."""
    grid = list(grid)
    for cfg in grid:
        if cfg.is_null:
            raise ConfigError("power experiments need delta_norm_sq > 0 and tau_frac < 1")
    return [run_experiment(cfg, methods, reps, alpha, **kwargs) for cfg in grid]


def results_table(results, timing: bool = True) -> list:
    """Flatten experiment results into rows keyed by ``RESULT_COLUMNS``."""
    rows = []
    for res in results:
        rows.extend(res.rows(timing=timing))
    return rows


def write_results_csv(rows, path=None) -> str:
    """Write rows as CSV to ``path`` (if given) and return the text."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row[k] is None else row[k]) for k in RESULT_COLUMNS})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_results_json(rows, path=None) -> str:
    """Write rows as a JSON document ``{"columns": [...], "results": [...]}``."""
    text = json.dumps({"columns": list(RESULT_COLUMNS), "results": list(rows)}, indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


@dataclass
class NullCalibration:
    """Null-distribution diagnostics from repeated draws of one configuration."""

    config: ScenarioConfig
    reps: int
    lambda_n: int
    scales: str
    samples: dict = field(repr=False)
    ks_gumbel_max0: float = math.nan
    ks_gumbel_max05: float = math.nan
    ks_normal_sum: float = math.nan
    corr_max0_sum: float = math.nan
    corr_max05_sum: float = math.nan
    contingency_pvalue_max0: float = math.nan
    contingency_pvalue_max05: float = math.nan
    sum_errors: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("samples", "config")}
        d["config"] = asdict(self.config)
        return d


def _null_statistics(X: DataMatrix, scales: str, lambda_n: int):
    n, p = X.n, X.p
    sc = ScaleEstimates.exact(1.0, p) if scales == "exact" else difference_variance(X)
    f05 = compute_cusum_field(X, 0.5, sc)
    M = max_stat_unweighted(compute_cusum_field(X, 0.0, sc))
    Md = max_stat_weighted(f05, lambda_n)
    try:
        s = sum_test(X, field=f05)
        z, ps = s.z_value, s.p_value
    except CalibrationError:
        z = ps = math.nan
    return M, Md, z, pvalue_max_unweighted(M, p), pvalue_max_weighted(Md, p, n, lambda_n), ps


def _contingency_pvalue(a, b, cut=0.2) -> float:
    ea, eb = a < cut, b < cut
    table = np.array([[np.sum(ea & eb), np.sum(ea & ~eb)], [np.sum(~ea & eb), np.sum(~ea & ~eb)]])
    return float(stats.fisher_exact(table)[1])


def null_calibration(cfg: ScenarioConfig, reps: int = 2000, lambda_n: int | None = None,
                     scales: str = "difference", threads: int = 1) -> NullCalibration:
    """Sample null statistics and compare them with their limit laws.

    Reports Kolmogorov-Smirnov distances of ``2 M^2 - log(2p)`` and
    ``A M_dag - D`` to the standard Gumbel law, of the studentized sum
    statistic to N(0, 1), plus the Pearson correlation between the max and
    sum p-values and a Fisher exact test on the 2x2 table of
    ``{p < 0.2}`` events.

    ``scales="exact"`` standardizes by the true unit scales (all supported
    families have unit marginal variance); ``"difference"`` uses the
    difference-based estimates as the tests do.
    """
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if scales not in ("exact", "difference"):
        raise ConfigError(f"scales must be 'exact' or 'difference', got {scales!r}")
    if lambda_n is None:
        lambda_n = default_lambda(cfg.n)
    n, p = cfg.n, cfg.p
    cfg0 = replace(cfg, delta_norm_sq=0.0, sparsity_k=0, tau_frac=1.0)

    def work(idx):
        return [_null_statistics(generate_dataset(replace(cfg0, seed=replication_seed(cfg.seed, r))),
                                 scales, lambda_n) for r in idx]

    rows = [row for part in _map(work, _chunks(0, reps), threads) for row in part]
    arr = np.array(rows, dtype=float)
    names = ("M", "M_dag", "z_sum", "p_max0", "p_max05", "p_sum")
    samples = {k: arr[:, i] for i, k in enumerate(names)}
    _, A, D = weighted_normalizers(p, n, lambda_n)
    gum = stats.gumbel_r.cdf
    out = NullCalibration(cfg, reps, int(lambda_n), scales, samples)
    out.ks_gumbel_max0 = float(stats.kstest(2 * samples["M"] ** 2 - math.log(2 * p), gum).statistic)
    out.ks_gumbel_max05 = float(stats.kstest(A * samples["M_dag"] - D, gum).statistic)
    ok = np.isfinite(samples["z_sum"])
    out.sum_errors = int(np.sum(~ok))
    if ok.sum() >= 3:
        out.ks_normal_sum = float(stats.kstest(samples["z_sum"][ok], "norm").statistic)
        ps = samples["p_sum"][ok]
        for key, col in (("max0", "p_max0"), ("max05", "p_max05")):
            pm = samples[col][ok]
            setattr(out, f"corr_{key}_sum", float(np.corrcoef(pm, ps)[0, 1]))
            setattr(out, f"contingency_pvalue_{key}", _contingency_pvalue(pm, ps))
    if reps < 200:
        out.warnings.append(f"insufficient replications for KS: {reps} < 200")
        log.warning("insufficient replications for KS: %d < 200", reps)
    return out
