from .construction import (
    BarrierContext,
    DomainSpec,
    PiecewiseSub,
    PiecewiseSuper,
    QuadraticSuper,
    SpliceReport,
    boundary_barrier,
    certify_sub,
    certify_super,
    exterior_samples,
)
from .profiles import (
    AsymptoticTarget,
    BarrierProfile,
    MuResult,
    choose_K,
    choose_delta,
    integrate_radial_w,
    integrate_sub_w,
    integrate_super_w,
    mu,
)

__all__ = [
    "AsymptoticTarget",
    "BarrierContext",
    "BarrierProfile",
    "DomainSpec",
    "MuResult",
    "PiecewiseSub",
    "PiecewiseSuper",
    "QuadraticSuper",
    "SpliceReport",
    "boundary_barrier",
    "certify_sub",
    "certify_super",
    "choose_K",
    "choose_delta",
    "exterior_samples",
    "integrate_radial_w",
    "integrate_sub_w",
    "integrate_super_w",
    "mu",
]
