"""
Tools Module - Model language, differentiation, equilibrium, rank test and simulation
"""

from .autodiff_tool import collapsed_jacobian, jacobian_params, jacobian_slots
from .dde_sim_tool import (
    ScalingReport,
    SeparationReport,
    Trajectory,
    constant_history,
    distinguishability_experiment,
    scaling_experiment,
    simulate_linear,
    simulate_nonlinear,
)
from .equilibrium_tool import (
    EquilibriumSearch,
    SolveAttempt,
    find_equilibria,
    newton_solve,
    search_equilibria,
)
from .errors import (
    BranchCutError,
    ConfigError,
    DelayIdentError,
    Diagnostic,
    DomainError,
    GridError,
    ModelParseError,
    SimulationError,
    SourceSpan,
    UnsupportedModelError,
)
from .expression_tool import Binding, compile_expr, eval_expr, format_expr
from .injectivity_tool import (
    CoeffMapReport,
    coeff_map_jacobian,
    coefficient_labels,
    injectivity_verdict,
)
from .linearization_tool import LinearDelayModel, linearize
from .model_ir_tool import (
    EquilibriumPoint,
    ModelFile,
    ModelSpec,
    ParameterPoint,
    eval_rhs,
    sample_point,
    validate,
)
from .model_parser_tool import parse_expression, parse_model, parse_model_file
from .rank_test_tool import (
    RankVerdict,
    controllability_rank,
    default_z_samples,
    delay_poly,
    kalman_block,
    numerical_rank,
    sweep_rank,
)
from .signals_tool import InputSignal, make_square_pulse

__all__ = [
    # Model language
    "parse_model",
    "parse_model_file",
    "parse_expression",
    "format_expr",
    "compile_expr",
    "eval_expr",
    "Binding",
    "ModelSpec",
    "ModelFile",
    "ParameterPoint",
    "EquilibriumPoint",
    "validate",
    "eval_rhs",
    "sample_point",
    # Differentiation and linearization
    "jacobian_slots",
    "jacobian_params",
    "collapsed_jacobian",
    "find_equilibria",
    "search_equilibria",
    "newton_solve",
    "EquilibriumSearch",
    "SolveAttempt",
    "LinearDelayModel",
    "linearize",
    # Rank test and injectivity
    "delay_poly",
    "kalman_block",
    "numerical_rank",
    "sweep_rank",
    "default_z_samples",
    "controllability_rank",
    "RankVerdict",
    "coefficient_labels",
    "coeff_map_jacobian",
    "injectivity_verdict",
    "CoeffMapReport",
    # Simulation
    "InputSignal",
    "make_square_pulse",
    "Trajectory",
    "constant_history",
    "simulate_nonlinear",
    "simulate_linear",
    "scaling_experiment",
    "distinguishability_experiment",
    "ScalingReport",
    "SeparationReport",
    # Errors
    "DelayIdentError",
    "ModelParseError",
    "Diagnostic",
    "SourceSpan",
    "DomainError",
    "BranchCutError",
    "UnsupportedModelError",
    "GridError",
    "SimulationError",
    "ConfigError",
]
