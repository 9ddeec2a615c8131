"""Receding-horizon episode loop shared by all four controllers.

Each cycle observes the plant, builds the controller's parameter hypotheses,
plans over the full horizon, executes the first `execution_window` controls
on the true plant, then updates the hypotheses: the transported controller
moves its particle set through one Stein step against the posterior induced
by the plan it just executed, ensemble controllers draw fresh prior samples
next cycle, and the nominal controller keeps the prior mean throughout.

Every random draw comes from a substream keyed by (seed, purpose, index)
without the controller identity, so two controllers run against the same
seed see identical initial states, identical true parameters, and identical
observation noise. Records carry no wall-clock quantities, which keeps them
byte-identical across worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..dynamics.engine import params_to_row, step
from ..dynamics.types import BodyState, PhysParams
from ..environments.specs import EnvSpec
from ..environments.tasks import goal_distance, initial_state, observe
from ..errors import ConfigurationError, IntegrationBlowup, PlanningFailure
from ..svgd.kernels import Kernel
from ..svgd.particles import ParticleSet
from ..svgd.posterior import PosteriorModel
from ..svgd.transport import SVGD_STEP_SIZE, svgd_step
from ..util import WorkPool, substream
from .objectives import OBJECTIVE_KINDS, RobustObjective
from .planner import PlanResult, SamplerConfig, default_sampler, plan, shift_warm_start

DEFAULT_PARTICLES = 5


@dataclass(frozen=True)
class ControllerKind:
    """Which objective drives planning and how hypotheses evolve.

    Attributes:
        kind: One of OBJECTIVE_KINDS.
        gamma: svdro gap weight, in (0, 1] for a live transported controller.
        beta: softdro temperature.
        epsilon: softdro ambiguity radius.
        n_particles: Ensemble size for every non-nominal controller.
        kernel: Stein kernel for the transported controller.
        svgd_step_size: Transport step size in prior-normalized coordinates.
        svgd_iterations: Stein steps per control cycle.
        gap_scale: Posterior sharpness multiplier.
        gap_sign: +1 concentrates particles on high-gap parameters.
    """

    kind: str
    gamma: float = 1.0
    beta: float = 1.0
    epsilon: float = 0.1
    n_particles: int = DEFAULT_PARTICLES
    kernel: Kernel = field(default_factory=Kernel)
    svgd_step_size: float = SVGD_STEP_SIZE
    svgd_iterations: int = 1
    gap_scale: float = 1.0
    gap_sign: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in OBJECTIVE_KINDS:
            raise ConfigurationError(f"unknown controller {self.kind!r}")
        if self.n_particles < 1:
            raise ConfigurationError("need at least one particle")
        if self.kind == "svdro":
            if not 0.0 < self.gamma <= 1.0:
                raise ConfigurationError("svdro gamma must be in (0, 1]")
            if self.svgd_step_size <= 0.0:
                raise ConfigurationError("svgd step size must be positive")
            if self.svgd_iterations < 1:
                raise ConfigurationError("need at least one transport step")
        if self.kind == "softdro":
            if self.beta <= 0.0:
                raise ConfigurationError("beta must be positive")
            if self.epsilon < 0.0:
                raise ConfigurationError("epsilon must be nonnegative")

    @property
    def label(self) -> str:
        return self.kind

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "n_particles": self.n_particles,
            "kernel": {"kind": self.kernel.kind, "bandwidth": self.kernel.bandwidth},
            "svgd_step_size": self.svgd_step_size,
            "svgd_iterations": self.svgd_iterations,
            "gap_scale": self.gap_scale,
            "gap_sign": self.gap_sign,
        }


def nominal_controller() -> ControllerKind:
    return ControllerKind(kind="nominal")


def emppi_controller(n_particles: int = DEFAULT_PARTICLES) -> ControllerKind:
    return ControllerKind(kind="emppi", n_particles=n_particles)


def softdro_controller(
    beta: float = 1.0, epsilon: float = 0.1, n_particles: int = DEFAULT_PARTICLES
) -> ControllerKind:
    return ControllerKind(
        kind="softdro", beta=beta, epsilon=epsilon, n_particles=n_particles
    )


def svdro_controller(
    gamma: float = 1.0,
    kernel: Kernel | None = None,
    n_particles: int = DEFAULT_PARTICLES,
    svgd_step_size: float = SVGD_STEP_SIZE,
) -> ControllerKind:
    return ControllerKind(
        kind="svdro",
        gamma=gamma,
        kernel=kernel if kernel is not None else Kernel(),
        n_particles=n_particles,
        svgd_step_size=svgd_step_size,
    )


@dataclass(frozen=True)
class EpisodeConfig:
    """Episode-level overrides; None defers to the environment spec."""

    total_steps: int | None = None
    execution_window: int | None = None
    observation_noise: bool = True

    def resolve(self, env: EnvSpec) -> tuple[int, int]:
        total = env.total_steps if self.total_steps is None else self.total_steps
        window = (
            env.execution_window
            if self.execution_window is None
            else self.execution_window
        )
        if total < 0:
            raise ConfigurationError("total steps must be nonnegative")
        if not 1 <= window <= env.horizon_steps:
            raise ConfigurationError(
                f"execution window {window} outside [1, {env.horizon_steps}]"
            )
        return total, window


@dataclass(frozen=True)
class CycleRecord:
    """One plan-execute-update cycle.

    Attributes:
        cycle: Cycle index.
        step: Plant steps completed once this cycle's window ran.
        objective: Planner objective of the executed plan.
        gap_mean: Mean absolute per-hypothesis cost excess of that plan, or
            None for the nominal controller.
        goal_distance: Plant goal distance after the window.
        particle_rows: Parameter hypotheses used for this cycle's plan, as
            nested tuples, or None when not recorded.
    """

    cycle: int
    step: int
    objective: float
    gap_mean: float | None
    goal_distance: float
    particle_rows: tuple[tuple[float, ...], ...] | None


@dataclass(frozen=True)
class TrialRecord:
    """Full account of one episode.

    `step_distances` holds the plant goal distance after every executed
    control, which is what completion times and success rates are computed
    from downstream. `failure` is None for a clean run; otherwise it names
    the abort reason and the episode stops at the step it reached.
    """

    env: str
    controller: dict
    seed: int
    true_row: tuple[float, float, float, float, float]
    step_distances: tuple[float, ...]
    final_distance: float
    min_distance: float
    cycles: tuple[CycleRecord, ...]
    failure: str | None = None

    @property
    def n_steps(self) -> int:
        return len(self.step_distances)


def _hypothesis_rows(
    controller: ControllerKind,
    env: EnvSpec,
    particles: ParticleSet | None,
    seed: int,
    cycle: int,
) -> NDArray[np.float64]:
    if controller.kind == "nominal":
        return env.prior.mean_row()[None, :]
    if controller.kind == "svdro":
        assert particles is not None
        return particles.rows
    return env.prior.sample_rows(
        substream(seed, "params", cycle), controller.n_particles
    )


def run_episode(
    env: EnvSpec,
    controller: ControllerKind,
    true_params: PhysParams,
    seed: int,
    sampler: SamplerConfig | None = None,
    config: EpisodeConfig | None = None,
    pool: WorkPool | None = None,
    record_particles: bool = True,
) -> TrialRecord:
    """Run one closed-loop episode and return its record.

    Args:
        env: Environment specification.
        controller: Objective and hypothesis-update rule.
        true_params: Plant parameters, typically drawn from the prior by the
            caller so controllers can be paired on identical draws.
        seed: Keys every substream (initial state, observations, planner
            noise, ensemble resampling, particle initialization).
        sampler: Planner settings; defaults to the environment's sampler.
        config: Episode overrides; defaults to the environment spec.
        pool: Optional worker pool for rollout chunks; results are identical
            at any worker count.
        record_particles: Whether cycle records keep hypothesis rows.
    """
    sampler = sampler if sampler is not None else default_sampler(env)
    cfg = config if config is not None else EpisodeConfig()
    total, window = cfg.resolve(env)

    state = initial_state(env, substream(seed, "init", 0))
    obs_rng = substream(seed, "obs", 0)
    particles: ParticleSet | None = None
    if controller.kind == "svdro":
        particles = ParticleSet.from_prior(
            env.prior, substream(seed, "particles", 0), controller.n_particles
        )

    goal = env.goal_array
    distances: list[float] = []
    cycles: list[CycleRecord] = []
    warm = np.zeros((sampler.horizon_steps, env.n_controls))
    failure: str | None = None
    min_distance = goal_distance(state, goal)

    t = 0
    cycle = 0
    while t < total:
        observed = observe(env, state, obs_rng) if cfg.observation_noise else state
        rows = _hypothesis_rows(controller, env, particles, seed, cycle)
        objective = RobustObjective(
            kind=controller.kind,
            env=env,
            phys=env.prior.full_matrix(rows),
            gamma=controller.gamma,
            beta=controller.beta,
            epsilon=controller.epsilon,
        )
        try:
            result: PlanResult = plan(
                objective, observed, warm, sampler, substream(seed, "plan", cycle), pool
            )
            executed = min(window, total - t)
            for i in range(executed):
                state, _ = step(state, result.controls[i], true_params, env)
                d = goal_distance(state, goal)
                distances.append(d)
                min_distance = min(min_distance, d)
                t += 1
            if controller.kind == "svdro":
                assert particles is not None
                model = PosteriorModel(
                    controls=result.controls,
                    initial=observed,
                    env=env,
                    gap_scale=controller.gap_scale,
                    gap_sign=controller.gap_sign,
                )
                for _ in range(controller.svgd_iterations):
                    particles = svgd_step(
                        particles,
                        model,
                        controller.kernel,
                        step_size=controller.svgd_step_size,
                        pool=pool,
                    )
        except (PlanningFailure, IntegrationBlowup) as exc:
            failure = f"{type(exc).__name__}: {exc}"
            break

        gaps = result.gaps
        cycles.append(
            CycleRecord(
                cycle=cycle,
                step=t,
                objective=result.objective,
                gap_mean=None if gaps is None else float(np.abs(gaps).mean()),
                goal_distance=distances[-1],
                particle_rows=(
                    tuple(tuple(float(v) for v in row) for row in rows)
                    if record_particles
                    else None
                ),
            )
        )
        warm = (
            shift_warm_start(result.controls, executed)
            if sampler.warm_start_shift
            else np.zeros_like(warm)
        )
        cycle += 1

    final = distances[-1] if distances else goal_distance(state, goal)
    return TrialRecord(
        env=env.name,
        controller=controller.to_dict(),
        seed=seed,
        true_row=tuple(float(v) for v in params_to_row(true_params)),
        step_distances=tuple(distances),
        final_distance=float(final),
        min_distance=float(min_distance),
        cycles=tuple(cycles),
        failure=failure,
    )


def completion_time(
    record: TrialRecord, threshold: float, dt: float, dwell: float = 0.5
) -> float | None:
    """First time the goal distance enters and stays within the threshold.

    The distance must hold below `threshold` for `dwell` seconds, truncated
    at the episode end, so a trial that finishes inside the threshold counts
    even when less than a full dwell remains. Returns seconds from episode
    start, or None when no step qualifies. An episode that aborted (planner
    or plant failure) never qualifies: its truncated trace says nothing
    about holding the goal.
    """
    if dt <= 0.0 or dwell < 0.0:
        raise ConfigurationError("dt must be positive and dwell nonnegative")
    if record.failure is not None:
        return None
    d = record.step_distances
    n = len(d)
    hold = max(1, int(round(dwell / dt)))
    runs = [0] * n
    run = 0
    for i in range(n - 1, -1, -1):
        run = run + 1 if d[i] <= threshold else 0
        runs[i] = run
    for i in range(n):
        if runs[i] >= min(hold, n - i):
            return (i + 1) * dt
    return None


def succeeded(record: TrialRecord, threshold: float, dt: float) -> bool:
    """Whether the episode reached and held the threshold (dwell rule)."""
    return completion_time(record, threshold, dt) is not None


def paired_true_params(env: EnvSpec, trial: int) -> PhysParams:
    """True plant parameters for a trial index, shared across controllers."""
    row = env.prior.sample_rows(substream(trial, "theta", 0), 1)[0]
    return env.prior.to_params(row)


def trial_seed(trial: int) -> int:
    """Episode seed for a trial index; also controller-independent."""
    return trial
