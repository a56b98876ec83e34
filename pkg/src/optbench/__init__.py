"""Composable optimizers with multiplicative and hybrid update rules,
benchmark objectives, a rate tuner, a robustness harness, and a toy
neural-network training protocol."""

from .harness import (
    EvalDistribution,
    Sampler,
    ScoreGrid,
    ScoreStats,
    TrialRecord,
    default_eval_distribution,
    evaluate_robustness,
    run_trial,
    sample_eval_config,
    surface_scan,
)
from .objectives import (
    Objective,
    TaskConfig,
    convex2d,
    distance_to_minimum,
    finite_difference_grad,
    make_objective,
    rosenbrock,
)
from .optim import (
    AdaptiveRule,
    DivergenceError,
    MomentumRule,
    NonFiniteGradientError,
    OptimizerSpec,
    OptimizerState,
    UpdateRule,
    additive_update,
    adaptive_rate,
    apply_update,
    default_update_rule,
    hybrid_update,
    init_state,
    make_spec,
    momentum,
    multiplicative_update,
    step,
)
from .tuning import GridSpec, RateGrids, TuneResult, build_grid, default_grids, grid_search, half_decade_grid

__all__ = [
    "AdaptiveRule",
    "DivergenceError",
    "EvalDistribution",
    "GridSpec",
    "MomentumRule",
    "NonFiniteGradientError",
    "Objective",
    "OptimizerSpec",
    "OptimizerState",
    "RateGrids",
    "Sampler",
    "ScoreGrid",
    "ScoreStats",
    "TaskConfig",
    "TrialRecord",
    "TuneResult",
    "UpdateRule",
    "additive_update",
    "adaptive_rate",
    "apply_update",
    "build_grid",
    "convex2d",
    "default_eval_distribution",
    "default_grids",
    "default_update_rule",
    "distance_to_minimum",
    "evaluate_robustness",
    "finite_difference_grad",
    "grid_search",
    "half_decade_grid",
    "hybrid_update",
    "init_state",
    "make_objective",
    "make_spec",
    "momentum",
    "multiplicative_update",
    "rosenbrock",
    "run_trial",
    "sample_eval_config",
    "step",
    "surface_scan",
]
