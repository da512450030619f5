"""Data-driven computational mechanics solvers.

Equilibrium of truss and geometrically exact beam models is computed without
a closed-form material model: either by enumerating a measurement set
(distance-minimizing solves per data pair) or by constraining the state onto
an implicitly defined constitutive manifold and solving a single
equality-constrained problem.  Both routes reduce to full-step Newton on a
symmetric indefinite KKT system.
"""

from .newton import (
    DimensionMismatch,
    Diverged,
    KktProblem,
    LinearSolveSingular,
    NewtonResult,
    NewtonSettings,
    jacobian_check,
    newton_solve,
    solve_kkt_linear,
)
from .laws import (
    DataSet,
    LawKind,
    ManifoldLaw,
    PhasePoint,
    SingularJacobian,
    UnsupportedLaw,
    beam_law_preset,
    consistency_check,
    g_eval,
    g_hessian_contract,
    g_jacobians,
    generate_synthetic_data,
    linear_law,
    polynomial_law,
    stress_from_strain,
    symmetry_check,
    symmetry_defect,
)
from .truss import (
    StartMode,
    SweepResult,
    TrussModel,
    dcnlp_enumerate,
    fixnlp_matrix,
    fixnlp_problem,
    fixnlp_residual,
    solve_fixnlp,
    truss_strain,
    unit_truss,
)
from .beam import ElementKinematics, ElementState, NodeState
from .assembly import (
    BeamSolution,
    RankDeficientConstraints,
    Structure,
    SymmetryReport,
    apply_benchmark_loads,
    approx_kkt_matrix,
    approx_problem,
    approx_residual,
    build_quarter_arc,
    recover_multipliers,
    solve_structure,
    stress_distribution,
    symmetry_diagnostics,
)

__version__ = "0.1.0"
