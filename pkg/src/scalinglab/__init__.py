"""Numerical checks for scaling limits of the free scalar field.

Modules: ``testfn`` (momentum-space test functions and norms), ``symm``
(Poincare maps and dilations), ``vacuum`` (Weyl expectations and the
scaling-limit gap), ``fock`` (truncated Fock space and the short-distance
expansion), ``bounds`` (norm bounds and nuclearity), ``dirint`` (finite
direct integrals and central decompositions) and ``cli``.
"""
from .errors import (ConfigError, ContractionOverflow, CutoffDependence, NonFiniteIntegral, NotAState,
                     NotConditionalExpectation, NotDecomposable, NotIsometric, PreconditionViolated,
                     RouteMismatch, ScalingLabError, ToleranceUnreachable)
from .kernels import BACKEND
from .quadrature import QuadratureScheme, quad_build
from .testfn import MomentumFunction, gaussian, mass_norm_sq, symplectic_form

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "ContractionOverflow", "CutoffDependence", "MomentumFunction",
    "NonFiniteIntegral", "NotAState", "NotConditionalExpectation", "NotDecomposable", "NotIsometric",
    "PreconditionViolated", "QuadratureScheme", "RouteMismatch", "ScalingLabError", "ToleranceUnreachable",
    "gaussian", "mass_norm_sq", "quad_build", "symplectic_form",
]
