"""Adaptive secant-step-size SGD with gradient variance reduction, baseline
optimizers, desk-scale benchmark problems, and an experiment harness."""

from .numerics import BlockLayout, ParamVector, Rng, block_view, gaussian_fill, l2_norm, make_rng, single_block
from .optimizer import (
    AdasecantState,
    NonFiniteError,
    OptimizerConfig,
    adagrad_guard,
    adasecant_step,
    applied_rates,
    init_adasecant_state,
)
from .problems import (
    Dataset,
    Problem,
    digits8x8_subset,
    finite_diff_grad,
    logistic_problem,
    mlp_problem,
    quadratic_problem,
    rosenbrock_problem,
    two_moons_data,
)
from .harness import (
    ExperimentConfig,
    GridResult,
    RunRecord,
    emit_plot_data,
    grid_search,
    parse_config_file,
    read_csv,
    run_experiment,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AdasecantState",
    "BlockLayout",
    "Dataset",
    "ExperimentConfig",
    "GridResult",
    "NonFiniteError",
    "OptimizerConfig",
    "ParamVector",
    "Problem",
    "Rng",
    "RunRecord",
    "adagrad_guard",
    "adasecant_step",
    "applied_rates",
    "block_view",
    "digits8x8_subset",
    "emit_plot_data",
    "finite_diff_grad",
    "gaussian_fill",
    "grid_search",
    "init_adasecant_state",
    "l2_norm",
    "logistic_problem",
    "make_rng",
    "mlp_problem",
    "parse_config_file",
    "quadratic_problem",
    "read_csv",
    "rosenbrock_problem",
    "run_experiment",
    "single_block",
    "two_moons_data",
    "write_csv",
]
