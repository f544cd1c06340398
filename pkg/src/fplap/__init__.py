"""Desk-scale toolkit for coefficient optimal control of regional and full
fractional p-Laplace equations in one space dimension."""

from .config import RunConfig, eval_expression, parse_config, sample_on_nodes
from .control import (
    ControlProblem,
    OptimizeReport,
    OptimizerOptions,
    objective,
    project_admissible,
    reduced_tracking_gradient_fd,
    solve_ocp_reference,
    solve_rocp,
    tv_prox,
    tv_seminorm,
)
from .errors import ConfigError, NonConvergence
from .forms import ControlField, LevelSet, PairAssembly, StateField
from .grid import (
    FULL,
    REGIONAL,
    DifferenceGrid,
    FracParams,
    Grid,
    build_difference_grid,
    build_grid,
)
from .regularizer import DELTA_BLEND, RegParams, f_n, f_n_prime, g_n, reg_primitive
from .state import (
    AprioriFlags,
    SolveOptions,
    SolveReport,
    apriori_report,
    assemble_full_variant_tail,
    minty_margin,
    residual,
    solve_state,
    solve_state_regularized,
    tail_integral,
)
from .sweep import (
    Schedule,
    SweepRecord,
    SweepResult,
    check_level_set_vanishing,
    default_schedule,
    emit_convergence_report,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AprioriFlags",
    "ConfigError",
    "ControlField",
    "ControlProblem",
    "DELTA_BLEND",
    "DifferenceGrid",
    "FULL",
    "FracParams",
    "Grid",
    "LevelSet",
    "NonConvergence",
    "OptimizeReport",
    "OptimizerOptions",
    "PairAssembly",
    "REGIONAL",
    "RegParams",
    "RunConfig",
    "Schedule",
    "SolveOptions",
    "SolveReport",
    "StateField",
    "SweepRecord",
    "SweepResult",
    "apriori_report",
    "assemble_full_variant_tail",
    "build_difference_grid",
    "build_grid",
    "check_level_set_vanishing",
    "default_schedule",
    "emit_convergence_report",
    "eval_expression",
    "f_n",
    "f_n_prime",
    "g_n",
    "minty_margin",
    "objective",
    "parse_config",
    "project_admissible",
    "reduced_tracking_gradient_fd",
    "reg_primitive",
    "residual",
    "run_sweep",
    "sample_on_nodes",
    "solve_ocp_reference",
    "solve_rocp",
    "solve_state",
    "solve_state_regularized",
    "tail_integral",
    "tv_prox",
    "tv_seminorm",
    "__version__",
]
