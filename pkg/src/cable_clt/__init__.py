"""Simulation and verification toolkit for the stochastic cable equation.

Realizes the equation du = (beta/2) u_xx dt - alpha u dt + sigma(u) dW on
[0, L] with space-time white noise, computes the analytic limit objects of
its spatial averages (Green's-function functionals, chaos coefficients,
limiting covariance), and verifies the central-limit behavior of the
averages empirically.
"""

from .model import (
    BoundaryCondition,
    ConfigurationError,
    DegenerateSampleError,
    ModelParams,
    NumericalFailureError,
    SigmaSpec,
    TruncationError,
    UnsupportedSigmaError,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "ConfigurationError",
    "DegenerateSampleError",
    "ModelParams",
    "NumericalFailureError",
    "SigmaSpec",
    "TruncationError",
    "UnsupportedSigmaError",
    "__version__",
]
