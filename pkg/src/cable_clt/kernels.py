"""Green's function of the cable equation on [0, L].

The deterministic cable equation  u_t = (beta/2) u_xx - alpha u  has Green's
function  G_t(x, y) = exp(-alpha t) g_{beta t}(x, y)  where g_s is the heat
kernel (for u_t = u_xx / 2) on [0, L] under the chosen boundary condition.
Two independent representations are implemented:

image sum   g_s(x,y) = sum_n  p_s(x - y + 2nL) +/- p_s(x + y + 2nL)
            (Neumann +, Dirichlet -; periodic uses offsets nL, no reflection)
spectral    g_s(x,y) = eigenfunction series with factors exp(-n^2 pi^2 s / (2 L^2))
            (exp(-2 n^2 pi^2 s / L^2) for periodic)

with p_s the Gaussian density of variance s.  Both truncations carry certified
tail bounds; the image sum converges fast for small s / L^2, the spectral
series for large s / L^2.

Also provided: the kernel mass I_0(t, x) = int_0^L G_t(x, y) dy (the mean of
the stochastic solution), and the constant K_T dominating G by a whole-line
Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .model import (
    BoundaryCondition,
    ModelParams,
    TruncationError,
)

_IMAGE_TERM_CAP = 100_000
_SPECTRAL_TERM_CAP = 2_000_000
# Below this diffusion ratio beta*t/L^2 the spectral series needs too many
# terms; requests for it are served by the image sum instead.
_SPECTRAL_SWITCH_RATIO = 1e-4


class GreenRep(str, Enum):
    IMAGE_SUM = "image_sum"
    SPECTRAL = "spectral"


@dataclass(frozen=True)
class KernelEval:
    """One kernel evaluation with its truncation certificate."""

    value: float
    truncation_terms: int
    tail_estimate: float
    representation: GreenRep
    switched: bool = False  # spectral request served by image sum at small t


def heat_kernel(t: float, z: float | np.ndarray) -> float | np.ndarray:
    """Gaussian density (2 pi t)^{-1/2} exp(-z^2 / (2t)); requires t > 0."""
    if t <= 0:
        raise ValueError(f"heat_kernel needs t > 0, got t={t}")
    z = np.asarray(z, dtype=float)
    out = np.exp(-z * z / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


def _p(s: float, z: float) -> float:
    return math.exp(-z * z / (2.0 * s)) / math.sqrt(2.0 * math.pi * s)


def _validate_point(params: ModelParams, t: float, x: float, y: float | None) -> None:
    if not 0 < t <= params.horizon:
        raise ValueError(f"need 0 < t <= T={params.horizon}, got t={t}")
    pts = (x,) if y is None else (x, y)
    for p in pts:
        if not 0 <= p <= params.length:
            raise ValueError(f"point {p} outside [0, {params.length}]")


def _image_sum(bc: BoundaryCondition, s: float, L: float, x: float, y: float,
               tol: float) -> tuple[float, int, float]:
    """Heat-kernel image sum at diffusion time s with tail <= returned bound.

    Images are accumulated in +/-n pairs so that swapping x and y reproduces
    the same floating-point additions (bitwise symmetry).
    """
    period = L if bc is BoundaryCondition.PERIODIC else 2.0 * L
    z_d = x - y
    if bc is BoundaryCondition.PERIODIC:
        total = _p(s, z_d)
        families = ((z_d, 1.0),)
    else:
        sign = -1.0 if bc is BoundaryCondition.DIRICHLET else 1.0
        z_r = x + y
        total = _p(s, z_d) + sign * _p(s, z_r)
        families = ((z_d, 1.0), (z_r, sign))
    n = 1
    terms = 1
    while True:
        # min |offset + n*period| over both families and signs of n
        a_next = (n - 1) * period
        bound_next = 2.0 * _p(s, a_next) if a_next > 0 else math.inf
        if bound_next < tol / 4.0:
            break
        if n > _IMAGE_TERM_CAP:
            raise TruncationError(
                f"image sum did not reach tol={tol} within {_IMAGE_TERM_CAP} images",
                achieved_tail=bound_next,
            )
        for z0, sgn in families:
            total += sgn * (_p(s, z0 + n * period) + _p(s, z0 - n * period))
        terms += 1
        n += 1
    # geometric tail: offsets grow by `period` each image
    a1 = (n - 1) * period
    ratio = math.exp(-(2.0 * a1 * period + period * period) / (2.0 * s))
    tail = len(families) * 2.0 * _p(s, a1) / (1.0 - ratio)
    return total, terms, tail


def _spectral(bc: BoundaryCondition, s: float, L: float, x: float, y: float,
              tol: float) -> tuple[float, int, float]:
    """Eigenfunction series at diffusion time s with tail <= returned bound."""
    if bc is BoundaryCondition.PERIODIC:
        c = 2.0 * math.pi * math.pi * s / (L * L)
        total = 1.0 / L
        w = 2.0 * math.pi * (x - y) / L
        mode: Callable[[int], float] = lambda n: math.cos(n * w)
    else:
        c = math.pi * math.pi * s / (2.0 * L * L)
        wx = math.pi * x / L
        wy = math.pi * y / L
        if bc is BoundaryCondition.NEUMANN:
            total = 1.0 / L
            mode = lambda n: math.cos(n * wx) * math.cos(n * wy)
        else:
            total = 0.0
            mode = lambda n: math.sin(n * wx) * math.sin(n * wy)
    amp = 2.0 / L
    n = 1
    terms = 0
    while amp * math.exp(-n * n * c) >= tol / 4.0:
        if n > _SPECTRAL_TERM_CAP:
            raise TruncationError(
                f"spectral series did not reach tol={tol} within {_SPECTRAL_TERM_CAP} modes",
                achieved_tail=amp * math.exp(-n * n * c),
            )
        total += amp * math.exp(-n * n * c) * mode(n)
        terms += 1
        n += 1
    tail = amp * math.exp(-n * n * c) / (1.0 - math.exp(-(2 * n + 1) * c))
    return total, terms, tail


def green(params: ModelParams, rep: GreenRep, t: float, x: float, y: float,
          tol: float = 1e-10) -> KernelEval:
    """Evaluate G_t(x, y) by the requested representation.

    The result's ``tail_estimate`` bounds the truncation error.  A spectral
    request at beta*t/L^2 below the switch ratio is served by the image sum
    (same function, better-conditioned series); ``switched`` records this.
    """
    _validate_point(params, t, x, y)
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = params.beta * t
    L = params.length
    used = rep
    switched = False
    if rep is GreenRep.SPECTRAL and s / (L * L) < _SPECTRAL_SWITCH_RATIO:
        used = GreenRep.IMAGE_SUM
        switched = True
    decay = math.exp(-params.alpha * t)
    # the requested tol applies to G = decay * g, so truncate g at tol / decay
    g_tol = tol / decay
    if used is GreenRep.IMAGE_SUM:
        g, terms, tail = _image_sum(params.bc, s, L, x, y, g_tol)
    else:
        g, terms, tail = _spectral(params.bc, s, L, x, y, g_tol)
    return KernelEval(
        value=decay * g,
        truncation_terms=terms,
        tail_estimate=decay * tail,
        representation=used,
        switched=switched,
    )


def green_mass_profile(params: ModelParams, t: float, x: np.ndarray,
                       tol: float = 1e-10) -> np.ndarray:
    """I_0(t, x) = int_0^L G_t(x, y) dy, vectorized over x.

    Equals exp(-alpha t) for Neumann/periodic; for Dirichlet it is the sine
    series  2 exp(-alpha t) sum_n sin(n pi x / L) (1 - cos n pi)/(n pi)
    exp(-n^2 pi^2 beta t / (2 L^2)).  I_0(0, x) = 1 by definition.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if t < 0:
        raise ValueError(f"green_mass needs t >= 0, got {t}")
    if t > params.horizon:
        raise ValueError(f"green_mass needs t <= T={params.horizon}, got {t}")
    if np.any(x < 0) or np.any(x > params.length):
        raise ValueError("x outside [0, L]")
    if t == 0:
        return np.ones_like(x)
    decay = math.exp(-params.alpha * t)
    if params.bc is not BoundaryCondition.DIRICHLET:
        return np.full_like(x, decay)
    L = params.length
    c = math.pi * math.pi * params.beta * t / (2.0 * L * L)
    total = np.zeros_like(x)
    n = 1
    while True:
        # odd n only; tail of sum_{odd m >= n} (4 / (m pi)) exp(-m^2 c)
        head = (4.0 / (n * math.pi)) * math.exp(-n * n * c)
        tail = head / (1.0 - math.exp(-4.0 * (n + 1) * c))
        if decay * tail < tol:
            break
        if n > _SPECTRAL_TERM_CAP:
            raise TruncationError(
                f"Dirichlet mass series did not reach tol={tol}",
                achieved_tail=decay * tail,
            )
        total += (4.0 / (n * math.pi)) * math.exp(-n * n * c) * np.sin(n * math.pi * x / L)
        n += 2
    return decay * total


def green_mass(params: ModelParams, t: float, x: float, tol: float = 1e-10) -> float:
    """Scalar I_0(t, x); see ``green_mass_profile``."""
    return float(green_mass_profile(params, t, np.array([x]), tol)[0])


def domination_constant(params: ModelParams) -> float:
    """K_T = exp(|alpha| T) (4 + 4 / (1 - exp(-1/(beta T)))).

    For all t in (0, T], L >= 1 and Neumann/Dirichlet boundaries,
    G_t(x, y) <= K_T p_{beta t}(x - y).
    """
    bt = params.beta * params.horizon
    return math.exp(abs(params.alpha) * params.horizon) * (
        4.0 + 4.0 / (1.0 - math.exp(-1.0 / bt))
    )


def gauss_legendre(f: Callable[[float], float], a: float, b: float,
                   panels: int, nodes: int = 16) -> float:
    """Composite Gauss-Legendre quadrature of a scalar function."""
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += half * sum(w * f(mid + half * xi) for xi, w in zip(xs, ws))
    return total


def mass_panels(params: ModelParams, t: float) -> int:
    """Panel count for kernel quadratures, scaled to L / sqrt(beta t)."""
    return max(4, math.ceil(params.length / math.sqrt(params.beta * t)))
