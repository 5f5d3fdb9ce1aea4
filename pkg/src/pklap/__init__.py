"""Multiple-solution toolkit for anisotropic discrete two-point
boundary value problems driven by two parameters.

Layers, bottom up: ``grid`` (zero-boundary grid functions and their
norms), ``nonlinearity`` (force/perturbation terms plus the structural
hypothesis checker), ``energy`` (action functional, residual, second
derivative), ``constants`` (the guarantee constants and their sampled
implication checks), ``solver`` (certified descent, deflated
multistart, grid oracle), ``report``/``cli`` (problem files, sweeps,
serialization).
"""

from .constants import (
    DegeneratePerturbationError,
    HypothesisViolationError,
    ImplicationReport,
    TheoremConstants,
    check_constant_implications,
    compute_constants,
)
from .energy import (
    ExponentProfile,
    ProblemSpec,
    energy,
    gradient,
    hessian,
    j_term,
    mu1,
    mu2,
    residual,
)
from .grid import GridFunction, NormPair, forward_difference, norms
from .nonlinearity import (
    AssumptionReport,
    Nonlinearity,
    NonlinearityConfigError,
    QuadratureError,
    StructuralConstants,
    anti_by_quadrature,
    make_example1,
    make_zero,
    verify_assumptions,
)
from .report import (
    CSV_HEADER,
    CellResult,
    SpecFileError,
    SpecValidationError,
    SweepReport,
    build_problem,
    load_problem_file,
    load_report,
    render_csv,
    render_json,
    report_to_dict,
    run_sweep,
    write_report,
)
from .solver import (
    CriticalPoint,
    MultistartResult,
    NonConvergenceError,
    SolverConfig,
    brute_force_oracle,
    classify,
    deflated_multistart,
    minimize_coercive,
    resolve_start_radius,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "CSV_HEADER",
    "CellResult",
    "CriticalPoint",
    "DegeneratePerturbationError",
    "ExponentProfile",
    "GridFunction",
    "HypothesisViolationError",
    "ImplicationReport",
    "MultistartResult",
    "NonConvergenceError",
    "Nonlinearity",
    "NonlinearityConfigError",
    "NormPair",
    "ProblemSpec",
    "QuadratureError",
    "SolverConfig",
    "SpecFileError",
    "SpecValidationError",
    "StructuralConstants",
    "SweepReport",
    "TheoremConstants",
    "anti_by_quadrature",
    "brute_force_oracle",
    "build_problem",
    "check_constant_implications",
    "classify",
    "compute_constants",
    "deflated_multistart",
    "energy",
    "forward_difference",
    "gradient",
    "hessian",
    "j_term",
    "load_problem_file",
    "load_report",
    "make_example1",
    "make_zero",
    "minimize_coercive",
    "resolve_start_radius",
    "mu1",
    "mu2",
    "norms",
    "render_csv",
    "render_json",
    "report_to_dict",
    "residual",
    "run_sweep",
    "verify_assumptions",
    "write_report",
]
