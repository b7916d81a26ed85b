"""blowprof: phase-space analysis of self-similar blow-up profiles.

Toolkit for the radial profile equation of ``u_t = Δ(u^m) + |x|^σ u^m``:
critical points and spectra, invariant-manifold approximations, separatrix
flow signs, orbit-fate classification, transition-exponent bracketing and
profile reconstruction.
"""

from __future__ import annotations

from ._core import KERNEL
from ._version import __version__
from .errors import (
    BisectionError,
    BlowprofError,
    ChartError,
    IntegrationError,
    ManifoldError,
    ParameterError,
    ProfileError,
    SeedError,
)
from .model import (
    CoefficientPack,
    DerivedConstants,
    ModelParams,
    coefficient_pack,
    derived_constants,
    validate_params,
)
from .vectorfields import (
    ChartId,
    CriticalPoint,
    ManifoldApprox,
    NormalFormP3,
    PointId,
    chart_variables,
    critical_point,
    eval_field,
    finite_critical_points,
    infinity_critical_points,
    jacobian,
    manifold_approx,
    normal_form_P3,
)
from .integrate import (
    BallEntry,
    Escape,
    IntegrationControls,
    PlaneCross,
    Stall,
    SurfaceCross,
    Trajectory,
    convert_state,
    integrate,
    poincare_section,
)
from .geometry import (
    CertificateClaim,
    CertificateReport,
    SeparatrixSurface,
    cycle_eval,
    proof_certificates,
)
from .shooting import (
    Fate,
    FateReport,
    ProfileClass,
    SeedOrigin,
    SeedSpec,
    TransitionBracket,
    TransitionParameter,
    bisect_transition,
    classify_fate,
    seed,
    sweep,
    sweep_to_csv,
    sweep_to_jsonable,
)
from .profiles import (
    GTransform,
    LocalBehavior,
    LocalKind,
    ProfileCurve,
    SelfMapReport,
    direct_ode_solve,
    g_transform,
    interface_slope_constant,
    local_expansion,
    ode_residual,
    profile_residual,
    reconstruct_profile,
    self_map_check,
    spiral_exponent_fit,
    tail_exponent,
)

__all__ = [
    "KERNEL",
    "__version__",
    "BlowprofError",
    "ParameterError",
    "ManifoldError",
    "ChartError",
    "IntegrationError",
    "SeedError",
    "BisectionError",
    "ProfileError",
    "ModelParams",
    "DerivedConstants",
    "CoefficientPack",
    "validate_params",
    "derived_constants",
    "coefficient_pack",
    "ChartId",
    "PointId",
    "CriticalPoint",
    "ManifoldApprox",
    "NormalFormP3",
    "chart_variables",
    "critical_point",
    "eval_field",
    "jacobian",
    "finite_critical_points",
    "infinity_critical_points",
    "manifold_approx",
    "normal_form_P3",
    "IntegrationControls",
    "PlaneCross",
    "SurfaceCross",
    "BallEntry",
    "Escape",
    "Stall",
    "Trajectory",
    "integrate",
    "poincare_section",
    "convert_state",
    "SeparatrixSurface",
    "cycle_eval",
    "CertificateClaim",
    "CertificateReport",
    "proof_certificates",
    "SeedOrigin",
    "SeedSpec",
    "Fate",
    "FateReport",
    "ProfileClass",
    "TransitionParameter",
    "TransitionBracket",
    "classify_fate",
    "seed",
    "sweep",
    "sweep_to_csv",
    "sweep_to_jsonable",
    "bisect_transition",
    "LocalKind",
    "LocalBehavior",
    "ProfileCurve",
    "GTransform",
    "SelfMapReport",
    "interface_slope_constant",
    "local_expansion",
    "reconstruct_profile",
    "direct_ode_solve",
    "ode_residual",
    "profile_residual",
    "g_transform",
    "tail_exponent",
    "spiral_exponent_fit",
    "self_map_check",
]
