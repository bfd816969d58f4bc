"""Model configuration for the stochastic cable equation on [0, L].

The equation is  du = (beta/2) u_xx dt - alpha u dt + sigma(u) dW  with
space-time white noise dW, initial condition u(0, x) = 1, and Neumann,
Dirichlet, or periodic boundary conditions.  ``ModelParams`` carries the
physical constants, the horizon T, and the noise coefficient sigma; it is
consumed by every other module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np


class ConfigurationError(ValueError):
    """Invalid parameters, grid, or experiment configuration."""


class UnsupportedSigmaError(ConfigurationError):
    """An operation that needs an affine sigma got a nonlinear one."""


class NumericalFailureError(RuntimeError):
    """A numerical routine failed (blow-up, factorization, ...)."""

    def __init__(self, message: str, step: int | None = None, replicate: int | None = None):
        super().__init__(message)
        self.step = step
        self.replicate = replicate

    def __reduce__(self):  # keep extra attributes across process boundaries
        return type(self), (self.args[0], self.step, self.replicate)


class TruncationError(NumericalFailureError):
    """A series could not reach the requested tolerance within the term cap."""

    def __init__(self, message: str, achieved_tail: float = float("nan")):
        super().__init__(message)
        self.achieved_tail = achieved_tail

    def __reduce__(self):
        return type(self), (self.args[0], self.achieved_tail)


class DegenerateSampleError(ValueError):
    """A statistic that needs positive sample variance got a constant sample."""


class BoundaryCondition(str, Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


# Named nonlinear coefficients: name -> (callable, Lipschitz constant).
# These are accepted by the solver; the chaos module requires affine sigma.
NONLINEAR_SIGMAS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], float]] = {
    "cos": (np.cos, 1.0),
    "sqrt1p_sq": (lambda u: np.sqrt(1.0 + u * u), 1.0),
}


@dataclass(frozen=True)
class SigmaSpec:
    """Noise coefficient sigma(u).

    Either affine, sigma(u) = sigma1 * u + sigma0, or one of the named
    Lipschitz nonlinearities in ``NONLINEAR_SIGMAS``.
    """

    sigma1: float | None = None
    sigma0: float | None = None
    name: str | None = None

    @classmethod
    def affine(cls, sigma1: float, sigma0: float) -> "SigmaSpec":
        return cls(sigma1=float(sigma1), sigma0=float(sigma0))

    @classmethod
    def named(cls, name: str) -> "SigmaSpec":
        if name not in NONLINEAR_SIGMAS:
            raise ConfigurationError(
                f"unknown sigma {name!r}; known: {sorted(NONLINEAR_SIGMAS)}"
            )
        return cls(name=name)

    @property
    def is_affine(self) -> bool:
        return self.name is None

    @property
    def lipschitz(self) -> float:
        if self.is_affine:
            return abs(self.sigma1)
        return NONLINEAR_SIGMAS[self.name][1]

    def __call__(self, u: np.ndarray | float) -> np.ndarray | float:
        if self.is_affine:
            return self.sigma1 * u + self.sigma0
        return NONLINEAR_SIGMAS[self.name][0](u)

    def validate(self) -> None:
        if self.is_affine:
            if self.sigma1 is None or self.sigma0 is None:
                raise ConfigurationError("affine sigma needs both coefficients")
            if not (math.isfinite(self.sigma1) and math.isfinite(self.sigma0)):
                raise ConfigurationError("sigma coefficients must be finite")
        elif self.name not in NONLINEAR_SIGMAS:
            raise ConfigurationError(f"unknown sigma {self.name!r}")

    def require_affine(self) -> tuple[float, float]:
        if not self.is_affine:
            raise UnsupportedSigmaError(
                f"operation requires affine sigma, got {self.name!r}"
            )
        return self.sigma1, self.sigma0


@dataclass(frozen=True)
class ModelParams:
    """Physical and model configuration.

    alpha   leak rate (1/time), any sign
    beta    2x diffusion rate (length^2/time), > 0
    length  domain length L >= 1
    horizon time horizon T > 0
    bc      boundary condition
    sigma   noise coefficient
    """

    alpha: float
    beta: float
    length: float
    horizon: float
    bc: BoundaryCondition = BoundaryCondition.NEUMANN
    sigma: SigmaSpec = SigmaSpec.affine(0.0, 1.0)

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be > 0, got {self.beta}")
        if not self.length >= 1:
            raise ConfigurationError(f"L must be >= 1, got {self.length}")
        if not self.horizon > 0:
            raise ConfigurationError(f"T must be > 0, got {self.horizon}")
        if not math.isfinite(self.alpha):
            raise ConfigurationError("alpha must be finite")
        self.sigma.validate()
        if not math.isfinite(self.sigma.lipschitz):
            raise ConfigurationError("sigma must declare a finite Lipschitz constant")
