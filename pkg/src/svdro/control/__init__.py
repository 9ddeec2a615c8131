"""Planning objectives, the sampling planner, and the episode loop."""

from .episode import (
    ControllerKind,
    CycleRecord,
    EpisodeConfig,
    TrialRecord,
    completion_time,
    emppi_controller,
    nominal_controller,
    paired_true_params,
    run_episode,
    softdro_controller,
    succeeded,
    svdro_controller,
    trial_seed,
)
from .objectives import (
    OBJECTIVE_KINDS,
    RobustObjective,
    objective_emppi,
    objective_nominal,
    objective_softdro,
    objective_svdro,
)
from .planner import (
    DEFAULT_CANDIDATES,
    DEFAULT_ITERATIONS,
    DEFAULT_TEMPERATURE,
    NOISE_FRACTION,
    PlanResult,
    SamplerConfig,
    default_sampler,
    plan,
    shift_warm_start,
)

__all__ = [
    "OBJECTIVE_KINDS",
    "RobustObjective",
    "objective_nominal",
    "objective_emppi",
    "objective_softdro",
    "objective_svdro",
    "DEFAULT_CANDIDATES",
    "DEFAULT_ITERATIONS",
    "DEFAULT_TEMPERATURE",
    "NOISE_FRACTION",
    "SamplerConfig",
    "PlanResult",
    "default_sampler",
    "plan",
    "shift_warm_start",
    "ControllerKind",
    "EpisodeConfig",
    "CycleRecord",
    "TrialRecord",
    "nominal_controller",
    "emppi_controller",
    "softdro_controller",
    "svdro_controller",
    "run_episode",
    "completion_time",
    "succeeded",
    "paired_true_params",
    "trial_seed",
]
