"""Chaos-expansion limit coefficients and the limiting covariance.

For affine noise sigma(u) = sigma1 u + sigma0 the large-L limit of the
averaged second moment of sigma(u(t, .)) is

    f_sigma(t) = sigma1^2 sum_{k>=0} f_k(t) + 2 sigma1 sigma0 e^{-alpha t}
                 + sigma0^2 ,

where f_0(t) = e^{-2 alpha t} and, for k >= 1, f_k(t) is a k-fold simplex
integral of Gaussian-kernel-at-zero factors.  The product of the k factors
(4 pi beta s_j)^{-1/2} over increments s_j summing to u has exact k-fold
convolution (4 pi beta)^{-k/2} Gamma(1/2)^k Gamma(k/2)^{-1} u^{k/2 - 1}
(the Dirichlet integral over the simplex), which collapses the simplex
integral to one dimension:

    f_k(t) = sigma1^{2(k-1)} e^{-2 alpha t} (4 beta)^{-k/2} / Gamma(k/2)
             * int_0^t u^{k/2 - 1} (sigma1 + sigma0 e^{alpha (t - u)})^2 du .

A plain Monte Carlo evaluation of the simplex integral (sorted uniforms)
serves as the independent oracle for this reduction.  The limiting covariance
of the normalized spatial averages sqrt(L) F_L is

    Cov(t1, t2) = int_0^{t1 ^ t2} e^{-alpha (t1 + t2 - 2s)} f_sigma(s) ds .

The running series-sum closed form  S(t) = 2 e^{t/4} Phi(sqrt(t/2))
(= sum_{k>=0} (t/4)^{k/2} / Gamma((k+2)/2)) provides the truncation tail
bounds and the upper bound on f_sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .model import ModelParams, SigmaSpec, TruncationError, NumericalFailureError

_K_MAX_CAP = 200
_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
_ORACLE_CHUNK = 200_000


def _phi(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def half_gamma_series(t: float) -> float:
    """Closed form 2 e^{t/4} Phi(sqrt(t/2)) of sum_{k>=0} (t/4)^{k/2} / Gamma((k+2)/2).

    Strictly increasing on [0, inf) with value 1 at t = 0.
    """
    if t < 0:
        raise ValueError(f"half_gamma_series needs t >= 0, got {t}")
    return 2.0 * math.exp(t / 4.0) * _phi(math.sqrt(t / 2.0))


def _resolve_sigma(params: ModelParams, sigma1: float | None,
                   sigma0: float | None) -> tuple[float, float]:
    if sigma1 is None or sigma0 is None:
        return params.sigma.require_affine()
    return float(sigma1), float(sigma0)


def f_k_closed(params: ModelParams, sigma1: float | None = None,
               sigma0: float | None = None, k: int = 0, t: float = 1.0) -> float:
    """k-th chaos coefficient f_k(t) via the exact 1-d reduction.

    The remaining integral int_0^t u^{k/2-1} (...)^2 du is evaluated by
    adaptive quadrature; the integrable endpoint singularity at k = 1 is
    removed exactly by the substitution u = t v^2.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    s1, s0 = _resolve_sigma(params, sigma1, sigma0)
    a = params.alpha
    if k == 0:
        return math.exp(-2.0 * a * t)
    if s1 == 0.0 and k >= 2:
        return 0.0

    def g(u: float) -> float:
        return (s1 + s0 * math.exp(a * (t - u))) ** 2

    if k == 1:
        integral = quad(lambda v: 2.0 * g(t * v * v), 0.0, 1.0, **_QUAD_OPTS)[0]
    else:
        integral = quad(lambda w: w ** (0.5 * k - 1.0) * g(t * w), 0.0, 1.0,
                        **_QUAD_OPTS)[0]
    # log prefactor; sigma1^{2(k-1)} with the 0^0 = 1 convention at k = 1
    log_pref = -2.0 * a * t + 0.5 * k * (math.log(t) - math.log(4.0 * params.beta))
    log_pref -= gammaln(0.5 * k)
    if k > 1:
        log_pref += 2.0 * (k - 1) * math.log(abs(s1))
    return math.exp(log_pref) * integral


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    std_error: float
    n_samples: int


def f_k_oracle(params: ModelParams, sigma1: float | None = None,
               sigma0: float | None = None, k: int = 1, t: float = 1.0,
               n_samples: int = 1_000_000, seed: int = 0) -> MonteCarloEstimate:
    """Brute-force Monte Carlo evaluation of the k-fold simplex integral.

    Ordered uniform k-tuples t > r_1 > ... > r_k > 0 (sorted uniforms; the
    simplex has volume t^k / k!) estimate the integrand product directly.
    Independent of the closed-form reduction.
    """
    if k < 1:
        raise ValueError(f"oracle needs k >= 1, got {k}")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if n_samples < 1000:
        raise ValueError(f"oracle needs n_samples >= 1000, got {n_samples}")
    s1, s0 = _resolve_sigma(params, sigma1, sigma0)
    a, b = params.alpha, params.beta
    pref = s1 ** (2 * (k - 1)) * math.exp(-2.0 * a * t) * t**k / math.factorial(k)

    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        m = min(_ORACLE_CHUNK, n_samples - done)
        r = np.sort(rng.random((m, k)) * t, axis=1)[:, ::-1]  # r_1 > ... > r_k
        inc = np.empty((m, k))
        inc[:, 0] = t - r[:, 0]
        if k > 1:
            inc[:, 1:] = r[:, :-1] - r[:, 1:]
        # product of p_{2 beta inc}(0) = (4 pi beta inc)^{-1/2}
        log_w = -0.5 * np.sum(np.log(4.0 * math.pi * b * inc), axis=1)
        w = np.exp(log_w) * (s1 + s0 * np.exp(a * r[:, -1])) ** 2
        total += float(w.sum())
        total_sq += float((w * w).sum())
        done += m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    return MonteCarloEstimate(
        value=pref * mean,
        std_error=abs(pref) * math.sqrt(var / n_samples),
        n_samples=n_samples,
    )


@dataclass(frozen=True)
class ChaosCoefficients:
    """Truncated coefficient sequence with its tail certificate.

    ``f_sigma`` is the truncated value; the exact series exceeds it by at
    most ``tail_bound``.  ``upper_bound`` is the analytic bound
    e^{-2 alpha t}(|s1| + e^{|alpha| t}|s0|)^2 (S(s1^4 t / beta) - 1)
    + (s1 e^{-alpha t} + s0)^2, which f_sigma never exceeds.
    """

    t: float
    k_max: int
    values: np.ndarray      # f_0 .. f_{k_max}
    tail_bound: float
    f_sigma: float
    upper_bound: float


def f_sigma(params: ModelParams, sigma1: float | None = None,
            sigma0: float | None = None, t: float = 1.0,
            tol: float = 1e-10) -> ChaosCoefficients:
    """Sum sigma1^2 f_k adaptively until the tail bound drops below tol.

    The tail of sum_{k > K} sigma1^2 f_k is bounded by
    e^{-2 alpha t}(|s1| + e^{|alpha| t}|s0|)^2 sum_{k > K} lambda^k / Gamma((k+2)/2)
    with lambda = s1^2 sqrt(t / (4 beta)); the remainder is evaluated exactly
    as S(4 lambda^2) minus the partial sum.
    """
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    s1, s0 = _resolve_sigma(params, sigma1, sigma0)
    a = params.alpha
    lam = s1 * s1 * math.sqrt(t / (4.0 * params.beta))
    pref = math.exp(-2.0 * a * t) * (abs(s1) + math.exp(abs(a) * t) * abs(s0)) ** 2
    series_total = half_gamma_series(4.0 * lam * lam)

    values: list[float] = []
    partial = 0.0
    tail = math.inf
    for k in range(_K_MAX_CAP + 1):
        values.append(f_k_closed(params, s1, s0, k=k, t=t))
        if k == 0:
            partial += 1.0
        elif lam > 0.0:
            partial += math.exp(k * math.log(lam) - gammaln(0.5 * k + 1.0))
        tail = pref * max(series_total - partial, 0.0)
        if tail <= tol:
            break
    else:
        raise TruncationError(
            f"chaos series did not reach tol={tol} within k_max={_K_MAX_CAP}",
            achieved_tail=tail,
        )
    vals = np.array(values)
    f_sig = s1 * s1 * float(vals.sum()) + 2.0 * s1 * s0 * math.exp(-a * t) + s0 * s0
    upper = (
        math.exp(-2.0 * a * t) * (abs(s1) + math.exp(abs(a) * t) * abs(s0)) ** 2
        * (half_gamma_series(s1**4 * t / params.beta) - 1.0)
        + (s1 * math.exp(-a * t) + s0) ** 2
    )
    if f_sig > upper + tol:
        raise NumericalFailureError(
            f"f_sigma={f_sig} exceeds its analytic bound {upper}"
        )
    return ChaosCoefficients(
        t=t, k_max=len(values) - 1, values=vals,
        tail_bound=tail, f_sigma=f_sig, upper_bound=upper,
    )


def limit_covariance(params: ModelParams,
                     sigma_spec: SigmaSpec | Callable[[float], float] | None = None,
                     t1: float = 1.0, t2: float = 1.0,
                     tol: float = 1e-8) -> float:
    """Limiting covariance of (sqrt(L) F_L(t1), sqrt(L) F_L(t2)).

    Adaptive quadrature of s -> e^{-alpha (t1 + t2 - 2s)} f_sigma(s) over
    [0, min(t1, t2)].  ``sigma_spec`` may be an affine SigmaSpec (f_sigma is
    computed from the chaos series) or any callable s -> f_sigma(s) for
    noise coefficients covered only by the averaged-moment limit assumption.
    """
    if sigma_spec is None:
        sigma_spec = params.sigma
    for t in (t1, t2):
        if not 0 < t <= params.horizon:
            raise ValueError(f"times must be in (0, T={params.horizon}], got {t}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if callable(sigma_spec) and not isinstance(sigma_spec, SigmaSpec):
        f_of_s = sigma_spec
    else:
        s1, s0 = sigma_spec.require_affine()
        inner_tol = min(1e-10, 0.1 * tol)
        f_of_s = lambda s: f_sigma(params, s1, s0, t=s, tol=inner_tol).f_sigma
    a = params.alpha
    upper = min(t1, t2)
    value = quad(
        lambda s: math.exp(-a * (t1 + t2 - 2.0 * s)) * f_of_s(s),
        0.0, upper, epsabs=0.5 * tol, epsrel=1e-10, limit=200,
    )[0]
    return float(value)
