"""Curvature invariants and similarity diagnostics for quotient Hilbert modules."""

__version__ = "0.1.0"

from .bundle import (
    CurvatureMatrix,
    GramFunction,
    cokernel_frame,
    delta_theta,
    exact_curvature,
    frame_for,
    line_curvature,
)
from .errors import (
    CertificateError,
    ChartError,
    ConfigError,
    CurvlabError,
    DegenerateInputError,
    DomainError,
    IndeterminateRankError,
    MetricDegeneracyError,
    NotCoprimeError,
    ParameterError,
    ShapeError,
    SingularPointError,
    StepSizeError,
    UnsupportedError,
)
from .grids import GridSpec
from .kernels import DomainSpec, KernelSpec, eval_kernel, gram_psd_check
from .multiplier import (
    MatrixMultiplier,
    PolyC,
    bezout_left_inverse,
    corona_bound,
    left_inverse_for,
    verify_left_inverse,
)
from .quotient import (
    IsoVerdict,
    QuotientSpec,
    additivity_profile,
    cross_kernel_check,
    cross_kernel_report,
    iso_test,
    kernel_curvature,
    quotient_curvature,
    twist_curvature,
    verify_additivity,
)
from .similarity import (
    build_idempotent,
    carleson_diagnostic,
    defect_profile,
    hs_projection_derivative,
    similarity_defect,
    splitting_angle,
    uniform_equivalence_diagnostic,
)
from .truncation import (
    build_truncated_module,
    build_truncated_quotient,
    localized_dimension,
    oracle_gram_check,
    quotient_eigenvector_check,
    similarity_map_condition,
    similarity_map_report,
)
from .wirtinger import WirtingerOrder, wirtinger_derivative, wirtinger_jet

__all__ = [
    "__version__",
    "GridSpec",
    "DomainSpec",
    "KernelSpec",
    "eval_kernel",
    "gram_psd_check",
    "WirtingerOrder",
    "wirtinger_derivative",
    "wirtinger_jet",
    "CurvatureMatrix",
    "GramFunction",
    "cokernel_frame",
    "delta_theta",
    "exact_curvature",
    "frame_for",
    "line_curvature",
    "CertificateError",
    "ChartError",
    "ConfigError",
    "CurvlabError",
    "DegenerateInputError",
    "DomainError",
    "IndeterminateRankError",
    "MetricDegeneracyError",
    "NotCoprimeError",
    "ParameterError",
    "ShapeError",
    "SingularPointError",
    "StepSizeError",
    "UnsupportedError",
    "MatrixMultiplier",
    "PolyC",
    "bezout_left_inverse",
    "corona_bound",
    "left_inverse_for",
    "verify_left_inverse",
    "IsoVerdict",
    "QuotientSpec",
    "additivity_profile",
    "cross_kernel_check",
    "cross_kernel_report",
    "iso_test",
    "kernel_curvature",
    "quotient_curvature",
    "twist_curvature",
    "verify_additivity",
    "build_idempotent",
    "carleson_diagnostic",
    "defect_profile",
    "hs_projection_derivative",
    "similarity_defect",
    "splitting_angle",
    "uniform_equivalence_diagnostic",
    "build_truncated_module",
    "build_truncated_quotient",
    "localized_dimension",
    "oracle_gram_check",
    "quotient_eigenvector_check",
    "similarity_map_condition",
    "similarity_map_report",
]
