"""Random linearly constrained programs, their scalar auxiliary programs and
closed-form limits of the optimal value."""
from .auxiliary import (AuxEvaluation, AuxSpec, GordonCheckSpec, GordonReport,
                        UnboundedAuxError, eval_aux_bp, eval_aux_general, eval_aux_lp,
                        eval_aux_nonhomogeneous, gordon_check)
from .harness import (ExperimentReport, ExperimentSpec, Mode, emit_report,
                      reproduce_table, run_experiment)
from .numerics import RngStream, gaussian_matrix, gaussian_vector, maximize_scalar
from .primal import (InfeasibleError, NonConvergedError, Solution, SolverConfig,
                     brute_force_oracle, certify, solve_primal)
from .problem import (ConfigurationError, ObjectiveKind, ObjectiveSpec, ProblemInstance,
                      ShapeConfig, sample_instance)
from .theory import EpsilonConfig, Side, TheoryResult, xi_bp, xi_gl, xi_lp

__all__ = [
    "AuxEvaluation",
    "AuxSpec",
    "GordonCheckSpec",
    "GordonReport",
    "UnboundedAuxError",
    "eval_aux_bp",
    "eval_aux_general",
    "eval_aux_lp",
    "eval_aux_nonhomogeneous",
    "gordon_check",
    "ExperimentReport",
    "ExperimentSpec",
    "Mode",
    "emit_report",
    "reproduce_table",
    "run_experiment",
    "RngStream",
    "gaussian_matrix",
    "gaussian_vector",
    "maximize_scalar",
    "InfeasibleError",
    "NonConvergedError",
    "Solution",
    "SolverConfig",
    "brute_force_oracle",
    "certify",
    "solve_primal",
    "ConfigurationError",
    "ObjectiveKind",
    "ObjectiveSpec",
    "ProblemInstance",
    "ShapeConfig",
    "sample_instance",
    "EpsilonConfig",
    "Side",
    "TheoryResult",
    "xi_bp",
    "xi_gl",
    "xi_lp",
]

__version__ = "0.1.0"
