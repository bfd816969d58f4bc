"""Estimators that turn ensembles into verdicts on the limit theorems.

* distance of standardized averages to the standard normal law
  (Kolmogorov-Smirnov, which lower-bounds total variation, plus a binned
  total-variation plug-in),
* log-log decay fits of distance against the domain length,
* exact sampling of the limiting Gaussian process (the time-changed
  Ornstein-Uhlenbeck-type integral with the chaos covariance),
* finite-dimensional two-sample comparison (covariance discrepancies and an
  energy-distance permutation test),
* increment moments for the modulus-of-continuity scaling.

All estimators are deterministic given their inputs and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .chaos import limit_covariance
from .model import (
    ConfigurationError,
    DegenerateSampleError,
    ModelParams,
    NumericalFailureError,
    SigmaSpec,
)

_EIG_CLIP = -1e-12


@dataclass(frozen=True)
class StandardizedSample:
    """Centered, unit-variance samples with the variance estimate."""

    values: np.ndarray
    variance: float
    variance_std_error: float   # delete-one jackknife
    mean: float


def standardize(samples: np.ndarray) -> StandardizedSample:
    """Subtract the sample mean and divide by the sample standard deviation."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 100:
        raise ConfigurationError(f"standardize needs >= 100 samples, got shape {x.shape}")
    n = x.size
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    if var <= 0.0:
        raise DegenerateSampleError("sample variance is zero")
    # delete-one variances in closed form
    s1 = x.sum()
    s2 = (x * x).sum()
    loo_mean = (s1 - x) / (n - 1)
    loo_var = (s2 - x * x - (n - 1) * loo_mean**2) / (n - 2)
    se = math.sqrt((n - 1) / n * float(((loo_var - loo_var.mean()) ** 2).sum()))
    return StandardizedSample(
        values=(x - mean) / math.sqrt(var),
        variance=var,
        variance_std_error=se,
        mean=mean,
    )


@dataclass(frozen=True)
class DistanceEstimate:
    """Distance of an empirical law to N(0, 1).

    KS is a sup over half-lines and therefore never exceeds the total
    variation distance; the binned plug-in estimates TV up to ``bin_slack``.
    """

    kind: str                    # "kolmogorov_smirnov" | "histogram_tv"
    value: float
    n: int
    bins: int | None = None
    bin_slack: float | None = None


def ks_distance(samples: np.ndarray) -> DistanceEstimate:
    """sup_x |empirical CDF - Phi(x)|, evaluated at the sample points."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 100:
        raise ConfigurationError(f"ks_distance needs >= 100 samples, got {n}")
    cdf = ndtr(x)
    i = np.arange(1, n + 1)
    d = max(float((i / n - cdf).max()), float((cdf - (i - 1) / n).max()))
    return DistanceEstimate(kind="kolmogorov_smirnov", value=d, n=n)


def tv_histogram(samples: np.ndarray, bins: int | None = None) -> DistanceEstimate:
    """Binned total-variation plug-in over equal-probability normal bins."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 1000:
        raise ConfigurationError(f"tv_histogram needs >= 1000 samples, got {n}")
    if bins is None:
        bins = math.ceil(n ** (1.0 / 3.0))
    if bins < 10:
        raise ConfigurationError(f"tv_histogram needs >= 10 bins, got {bins}")
    edges = ndtri(np.arange(1, bins) / bins)
    counts = np.bincount(np.searchsorted(edges, x), minlength=bins)
    freq = counts / n
    value = 0.5 * float(np.abs(freq - 1.0 / bins).sum())
    slack = float(max(freq.max(), 1.0 / bins))
    return DistanceEstimate(kind="histogram_tv", value=value, n=n,
                            bins=bins, bin_slack=slack)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log(distance) = log c - gamma log L."""

    l_values: np.ndarray
    distances: np.ndarray
    slope: float                 # of log-distance vs log-L (= -gamma)
    intercept: float
    residual_norm: float
    slope_std_error: float

    @property
    def decay_exponent(self) -> float:
        return -self.slope


def fit_decay_exponent(pairs: Sequence[tuple[float, float]]) -> DecayFit:
    ls = np.array([p[0] for p in pairs], dtype=float)
    ds = np.array([p[1] for p in pairs], dtype=float)
    if len(np.unique(ls)) < 3:
        raise ConfigurationError("decay fit needs >= 3 distinct L values")
    if np.any(ds <= 0):
        raise ValueError("distances must be positive for a log-log fit")
    x = np.log(ls)
    y = np.log(ds)
    n = x.size
    xc = x - x.mean()
    slope = float((xc * y).sum() / (xc * xc).sum())
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    rss = float((resid * resid).sum())
    if n > 2:
        se = math.sqrt(rss / (n - 2) / float((xc * xc).sum()))
    else:
        se = 0.0
    return DecayFit(
        l_values=ls, distances=ds, slope=slope, intercept=intercept,
        residual_norm=math.sqrt(rss), slope_std_error=se,
    )


@dataclass(frozen=True)
class LimitProcessSample:
    """Exact Gaussian draws of the limit process at fixed times."""

    times: np.ndarray
    covariance: np.ndarray       # (m, m), from the chaos limit covariance
    samples: np.ndarray          # (n, m)
    min_eigenvalue: float
    clipped_modes: int


def sample_limit_process(params: ModelParams,
                         sigma_spec: SigmaSpec | Callable[[float], float],
                         times: Sequence[float], n: int, seed: int,
                         cov_tol: float = 1e-8) -> LimitProcessSample:
    """Draw n exact Gaussian vectors of the limit process at the given times.

    The covariance is built entrywise from the chaos limit covariance and
    factorized by symmetric eigendecomposition; eigenvalues in
    [-1e-12, 0) are clipped to zero, anything lower is an error.
    """
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size < 1:
        raise ConfigurationError("need at least one time point")
    if np.any(ts <= 0) or np.any(ts > params.horizon):
        raise ConfigurationError(f"times must lie in (0, T={params.horizon}]")
    m = ts.size
    cov = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            cov[i, j] = cov[j, i] = limit_covariance(
                params, sigma_spec, float(ts[i]), float(ts[j]), tol=cov_tol)
    lam, vec = np.linalg.eigh(cov)
    min_eig = float(lam.min())
    if min_eig < _EIG_CLIP:
        raise NumericalFailureError(
            f"covariance not positive semidefinite: min eigenvalue {min_eig}"
        )
    clipped = int((lam < 0).sum())
    lam = np.clip(lam, 0.0, None)
    root = vec * np.sqrt(lam)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, m))
    return LimitProcessSample(
        times=ts, covariance=cov, samples=z @ root.T,
        min_eigenvalue=min_eig, clipped_modes=clipped,
    )


@dataclass(frozen=True)
class FddComparison:
    """Finite-dimensional two-sample comparison report."""

    times: np.ndarray
    cov_a: np.ndarray
    cov_b: np.ndarray
    cov_pooled_se: np.ndarray
    max_cov_z: float             # max |cov_a - cov_b| / pooled SE
    energy_distance: float
    p_value: float
    n_permutations: int


def _cov_with_se(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xc = x - x.mean(axis=0)
    n = x.shape[0]
    cov = xc.T @ xc / (n - 1)
    prod = xc[:, :, None] * xc[:, None, :]
    se = prod.std(axis=0, ddof=1) / math.sqrt(n)
    return cov, se


def _pairwise_distances(pool: np.ndarray) -> np.ndarray:
    sq = (pool * pool).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pool @ pool.T)
    np.clip(d2, 0.0, None, out=d2)
    return np.sqrt(d2, out=d2).astype(np.float32)


def _energy_stat(dist: np.ndarray, mask_a: np.ndarray, row_sums: np.ndarray,
                 total: float) -> float:
    na = int(mask_a.sum())
    nb = mask_a.size - na
    q = dist @ mask_a.astype(np.float32)
    s_aa = float(mask_a @ q)
    s_a_all = float(row_sums @ mask_a)
    s_ab = s_a_all - s_aa
    s_bb = total - 2.0 * s_a_all + s_aa
    return 2.0 * s_ab / (na * nb) - s_aa / (na * na) - s_bb / (nb * nb)


def fdd_compare(sample_a: np.ndarray, sample_b: np.ndarray,
                times: Sequence[float] | None = None,
                n_permutations: int = 500, seed: int = 0) -> FddComparison:
    """Compare two multivariate samples of the process at common times.

    Reports entrywise covariance discrepancies with pooled standard errors
    and a two-sample energy-distance statistic with a permutation p-value.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ConfigurationError(
            f"samples must share the time dimension, got {a.shape} vs {b.shape}"
        )
    if a.shape[0] < 1000 or b.shape[0] < 1000:
        raise ConfigurationError("fdd_compare needs >= 1000 samples on each side")
    m = a.shape[1]
    ts = np.arange(1, m + 1, dtype=float) if times is None else np.asarray(times, float)

    cov_a, se_a = _cov_with_se(a)
    cov_b, se_b = _cov_with_se(b)
    pooled = np.sqrt(se_a**2 + se_b**2)
    max_z = float(np.max(np.abs(cov_a - cov_b) / pooled))

    pool = np.concatenate([a, b], axis=0)
    dist = _pairwise_distances(pool)
    row_sums = dist.sum(axis=1, dtype=np.float64).astype(np.float32)
    total = float(dist.sum(dtype=np.float64))
    na = a.shape[0]
    labels = np.zeros(pool.shape[0], dtype=np.float32)
    labels[:na] = 1.0
    observed = _energy_stat(dist, labels, row_sums, total)

    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_permutations):
        perm = labels[rng.permutation(pool.shape[0])]
        if _energy_stat(dist, perm, row_sums, total) >= observed:
            hits += 1
    p = (1 + hits) / (1 + n_permutations)
    return FddComparison(
        times=ts, cov_a=cov_a, cov_b=cov_b, cov_pooled_se=pooled,
        max_cov_z=max_z, energy_distance=observed, p_value=p,
        n_permutations=n_permutations,
    )


@dataclass(frozen=True)
class MomentEstimate:
    """E[|F_L(t2) - F_L(t1)|^k]^{1/k} with a bootstrap standard error."""

    value: float
    std_error: float
    k: int
    t1: float
    t2: float
    n_rep: int


def increment_moment(ensemble, t1: float, t2: float, k: int,
                     seed: int = 0, n_bootstrap: int = 200) -> MomentEstimate:
    """Increment moment of the recorded F_L paths between two output times."""
    if k not in (2, 4):
        raise ConfigurationError(f"k must be 2 or 4, got {k}")
    if not t1 < t2:
        raise ConfigurationError("need t1 < t2")
    times = ensemble.times
    idx = []
    for t in (t1, t2):
        j = int(np.argmin(np.abs(times - t)))
        if abs(times[j] - t) > 1e-9 * max(1.0, float(times[-1])):
            raise ConfigurationError(f"time {t} not among output times {times}")
        idx.append(j)
    d = np.abs(ensemble.f_l[:, idx[1]] - ensemble.f_l[:, idx[0]]) ** k
    n = d.size
    value = float(d.mean()) ** (1.0 / k)
    rng = np.random.default_rng(seed)
    boot = np.empty(n_bootstrap)
    for bi in range(n_bootstrap):
        boot[bi] = float(d[rng.integers(0, n, n)].mean()) ** (1.0 / k)
    return MomentEstimate(
        value=value, std_error=float(boot.std(ddof=1)), k=k,
        t1=float(times[idx[0]]), t2=float(times[idx[1]]), n_rep=n,
    )
