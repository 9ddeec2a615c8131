"""Benchmark task definitions: costs, priors, specs, and episode protocol."""

from .costs import (
    BLOWUP_COST,
    CostWeights,
    error_vectors,
    rollout_cost_batch,
    running_cost,
    terminal_cost,
    trajectory_cost,
    wrap_angle,
)
from .specs import EnvSpec, ParamPrior, sample_prior
from .tasks import (
    goal_distance,
    initial_state,
    make_env,
    make_pusht_env,
    make_tray_env,
    observe,
    success,
)

__all__ = [
    "BLOWUP_COST",
    "CostWeights",
    "EnvSpec",
    "ParamPrior",
    "error_vectors",
    "goal_distance",
    "initial_state",
    "make_env",
    "make_pusht_env",
    "make_tray_env",
    "observe",
    "rollout_cost_batch",
    "running_cost",
    "sample_prior",
    "success",
    "terminal_cost",
    "trajectory_cost",
    "wrap_angle",
]
