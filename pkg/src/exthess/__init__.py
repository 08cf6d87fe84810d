"""Barrier constructions and approximate viscosity solutions for
Hessian-type fully nonlinear equations on exterior domains."""

__version__ = "0.1.0"

from .symfun import (
    ConeSpec,
    CustomOperator,
    HessianQuotientRoot,
    HessianRoot,
    LambdaVec,
    SpecialLagrangian,
    alpha_of,
    check_structure,
    validate_A,
)

__all__ = [
    "ConeSpec",
    "CustomOperator",
    "HessianQuotientRoot",
    "HessianRoot",
    "LambdaVec",
    "SpecialLagrangian",
    "alpha_of",
    "check_structure",
    "validate_A",
    "__version__",
]
