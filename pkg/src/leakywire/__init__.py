"""Bound states of leaky quantum wires.

Computes the discrete spectrum below -alpha^2/4 of the planar operator
-Laplacian - alpha delta(x - Gamma) for an infinite curve Gamma by solving
lambda_j(kappa) = 1 for the integral operator with kernel
(alpha/2pi) K0(kappa |gamma(s) - gamma(s')|), and cross-checks the result
against finite-difference Hamiltonians with thin "ditch" potentials.
"""
from .errors import (
    AssumptionViolation,
    ConfigError,
    ConvergenceError,
    DegenerateParametrizationError,
    DomainError,
    GeometryError,
    GridMismatchError,
    LeakyWireError,
    MeshError,
    UndefinedPairError,
)
from .special import k0, k1

__version__ = "0.1.0"
