"""Analysis of strongly coupled cross-diffusion steady states.

The package revolves around a population model with flux matrix
``A(u) = dP/du`` for ``P_i(u) = u_i * (d_i + sum_j alpha_ij u_j)`` and
Lotka-Volterra reactions ``f_i(u) = u_i * (r_i - sum_j c_ij u_j)``.  It
enumerates constant steady states, computes local fixed-point indices
mode by mode, issues existence verdicts for nonconstant positive
solutions, and confirms or refutes those verdicts with a nonlinear
finite-difference solver plus homotopy continuation.
"""

from __future__ import annotations

from .model import (
    BoundaryCondition,
    ConfigError,
    Domain,
    Model,
    ModelError,
    StructureReport,
    build_model,
    evaluate,
    validate_structure,
)
from .steady_states import (
    ConstantState,
    EnumerationError,
    StateEnumeration,
    find_constant_states,
    refine_root,
)
from .spectral import (
    ModeSpectrum,
    SpectrumEntry,
    discrete_laplacian_spectrum,
    eigenfunction,
    neumann_eigenvalues,
    spectrum_through,
)
from .index_theory import (
    CutoffError,
    ExistenceVerdict,
    IndexReport,
    ModeDecision,
    StabilityVerdict,
    check_nondegeneracy,
    constant_state_index,
    existence_verdict,
    mode_cutoff,
    mode_matrix,
    negative_count,
    semitrivial_stability,
)
from .pde_solver import (
    ConvergenceError,
    DiscreteField,
    DiscreteSystem,
    Grid,
    SolveResult,
    classify_field,
    constant_field,
    continuation_solve,
    discretize,
    fixed_point_solve,
    make_grid,
    newton_solve,
    random_field,
    seed_from_mode,
)
from .diagnostics import (
    DiagnosticsReport,
    bmo_seminorm,
    diagnostics_report,
    identity_residuals,
    nonexistence_threshold,
    norms,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "ConfigError",
    "ConstantState",
    "ConvergenceError",
    "CutoffError",
    "DiagnosticsReport",
    "DiscreteField",
    "DiscreteSystem",
    "Domain",
    "EnumerationError",
    "ExistenceVerdict",
    "Grid",
    "IndexReport",
    "ModeDecision",
    "ModeSpectrum",
    "Model",
    "ModelError",
    "SolveResult",
    "SpectrumEntry",
    "StabilityVerdict",
    "StateEnumeration",
    "StructureReport",
    "bmo_seminorm",
    "build_model",
    "check_nondegeneracy",
    "classify_field",
    "constant_field",
    "constant_state_index",
    "continuation_solve",
    "diagnostics_report",
    "discrete_laplacian_spectrum",
    "discretize",
    "eigenfunction",
    "evaluate",
    "existence_verdict",
    "find_constant_states",
    "fixed_point_solve",
    "identity_residuals",
    "make_grid",
    "mode_cutoff",
    "mode_matrix",
    "negative_count",
    "neumann_eigenvalues",
    "newton_solve",
    "nonexistence_threshold",
    "norms",
    "random_field",
    "refine_root",
    "seed_from_mode",
    "semitrivial_stability",
    "spectrum_through",
    "validate_structure",
    "__version__",
]
