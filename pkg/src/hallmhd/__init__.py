"""Pseudo-spectral workbench for the extended (u, B, J) Hall-MHD system.

Mild solutions are built by Picard iteration in discrete Besov-Morrey
space-time norms on a periodic box, and the product, heat and Duhamel
estimates behind the construction are measured on random fields.
"""

from .errors import (
    ConfigurationError,
    DomainError,
    HallMHDError,
    IntegrityError,
    NonConvergenceError,
    StorageError,
)
from .field import (
    GridSpec,
    ScalarField,
    TensorField,
    VectorField,
    cross_product,
    curl,
    curl_inv,
    divergence,
    dot_product,
    gradient,
    heat_propagate,
    laplacian,
    leray_project,
    outer,
    recover_pressure,
    set_fft_workers,
    tensor_divergence,
    to_physical,
    to_spectral,
)
from .lp import (
    LPPartition,
    MorreyPolicy,
    NormReport,
    NormSpec,
    besov_morrey_norm,
    build_partition,
    decompose,
    lp_block,
    lp_norm,
    morrey_norm,
    spacetime_norms,
)
from .nonlinear import (
    ExtendedState,
    PhysicalParams,
    extended_rhs,
    linear_part,
    original_rhs_residual,
    pi_a,
    pi_b,
)
from .solver import (
    PicardResult,
    SolverConfig,
    Trajectory,
    duhamel_bilinear,
    duhamel_integral,
    heat_trajectory,
    march_reference,
    picard_global,
    picard_local,
    smallness_report,
)
from .verification import (
    EstimateReport,
    Lemma,
    check_j_consistency,
    check_scaling,
    contraction_probe,
    estimate_constant,
    uniqueness_probe,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "HallMHDError",
    "IntegrityError",
    "NonConvergenceError",
    "StorageError",
    "GridSpec",
    "ScalarField",
    "TensorField",
    "VectorField",
    "cross_product",
    "curl",
    "curl_inv",
    "divergence",
    "dot_product",
    "gradient",
    "heat_propagate",
    "laplacian",
    "leray_project",
    "outer",
    "recover_pressure",
    "set_fft_workers",
    "tensor_divergence",
    "to_physical",
    "to_spectral",
    "LPPartition",
    "MorreyPolicy",
    "NormReport",
    "NormSpec",
    "besov_morrey_norm",
    "build_partition",
    "decompose",
    "lp_block",
    "lp_norm",
    "morrey_norm",
    "spacetime_norms",
    "ExtendedState",
    "PhysicalParams",
    "extended_rhs",
    "linear_part",
    "original_rhs_residual",
    "pi_a",
    "pi_b",
    "PicardResult",
    "SolverConfig",
    "Trajectory",
    "duhamel_bilinear",
    "duhamel_integral",
    "heat_trajectory",
    "march_reference",
    "picard_global",
    "picard_local",
    "smallness_report",
    "EstimateReport",
    "Lemma",
    "check_j_consistency",
    "check_scaling",
    "contraction_probe",
    "estimate_constant",
    "uniqueness_probe",
]
