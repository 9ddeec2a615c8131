"""Sampling-based planner shared by every controller.

One plan() call runs a fixed number of path-integral style refinement
iterations: perturb the incumbent mean sequence with Gaussian noise, clip to
the control box, score every candidate through the objective, and re-center
on the exponentially weighted mean. The weighted mean is where the progress
comes from: per-dimension noise that did not help averages out across
candidates, so the mean is routinely better than every sampled candidate.
Slot 0 of each iteration carries the incumbent mean and slot 1 the best
single sequence seen so far, and the final mean is scored before returning,
so the reported objective is non-increasing across iterations and a
zero-noise single-iteration call returns the warm start unchanged.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..dynamics.types import BodyState
from ..environments.specs import EnvSpec
from ..errors import ConfigurationError
from ..util import WorkPool
from .objectives import RobustObjective

DEFAULT_CANDIDATES = 256
DEFAULT_TEMPERATURE = 0.5
DEFAULT_ITERATIONS = 3
NOISE_FRACTION = 0.2
NOISE_CORRELATION = 0.8


@dataclass(frozen=True)
class SamplerConfig:
    """Shape of the candidate distribution.

    Attributes:
        n_candidates: Sequences scored per iteration.
        noise_std: Per-control-dimension perturbation std, broadcast over the
            horizon.
        noise_correlation: AR(1) coefficient correlating perturbations across
            time, with the per-step std preserved. White noise (0) explores
            only high-frequency wiggles; a sustained push over even four
            steps is then vanishingly rare among the candidates, and plans
            that must hold a force or torque are never sampled.
        temperature: Weighting temperature as a fraction of the gap between
            the iteration's mean and best objective; smaller concentrates on
            the best candidates, and the weighting is invariant to the
            objective's absolute scale.
        horizon_steps: Planned sequence length.
        iterations: Refinement passes per plan() call.
        warm_start_shift: Whether callers should seed the next plan with the
            time-shifted previous one (consumed by the episode loop).
    """

    noise_std: tuple[float, ...]
    horizon_steps: int
    n_candidates: int = DEFAULT_CANDIDATES
    noise_correlation: float = NOISE_CORRELATION
    temperature: float = DEFAULT_TEMPERATURE
    iterations: int = DEFAULT_ITERATIONS
    warm_start_shift: bool = True

    def __post_init__(self) -> None:
        if self.n_candidates < 1:
            raise ConfigurationError("need at least one candidate")
        if self.horizon_steps < 1:
            raise ConfigurationError("horizon must be at least one step")
        if self.iterations < 1:
            raise ConfigurationError("need at least one iteration")
        if self.temperature <= 0.0:
            raise ConfigurationError("temperature must be positive")
        if not 0.0 <= self.noise_correlation < 1.0:
            raise ConfigurationError("noise correlation must be in [0, 1)")
        std = tuple(float(s) for s in self.noise_std)
        if not std or any(s < 0.0 or not np.isfinite(s) for s in std):
            raise ConfigurationError("noise stds must be finite and nonnegative")
        object.__setattr__(self, "noise_std", std)


def default_sampler(
    env: EnvSpec,
    n_candidates: int = DEFAULT_CANDIDATES,
    iterations: int = DEFAULT_ITERATIONS,
) -> SamplerConfig:
    """Sampler with per-dimension noise tied to the control cost.

    Each dimension explores at sqrt(temperature / R_i), the path-integral
    covariance for which one step of exploration costs about one temperature
    unit, capped at a fixed fraction of the control range. Without the cost
    cap, heavily priced dimensions flood the candidate values with control
    cost noise and drown the task signal of the others.
    """
    span = env.control_upper_array - env.control_lower_array
    r = env.weights.r_full(env.physics.n_controls)
    with np.errstate(divide="ignore"):
        cost_scale = np.sqrt(DEFAULT_TEMPERATURE / np.maximum(r, 0.0))
    return SamplerConfig(
        noise_std=tuple(np.minimum(NOISE_FRACTION * span, cost_scale)),
        horizon_steps=env.horizon_steps,
        n_candidates=n_candidates,
        iterations=iterations,
    )


@dataclass(frozen=True)
class PlanResult:
    """Best sequence found and its score.

    Attributes:
        controls: (horizon_steps, n_controls), inside the control box.
        objective: Objective value of `controls`.
        gaps: (N,) per-hypothesis cost excess for `controls`, or None when
            the objective carries no ensemble.
        duration: Wall-clock seconds spent planning. Never serialized into
            trial records.
    """

    controls: NDArray[np.float64]
    objective: float
    gaps: NDArray[np.float64] | None
    duration: float


def plan(
    objective: RobustObjective,
    initial: BodyState,
    warm_start: NDArray[np.float64],
    sampler: SamplerConfig,
    rng: np.random.Generator,
    pool: WorkPool | None = None,
) -> PlanResult:
    """Refine a control sequence against the objective.

    Args:
        objective: Scoring rule closed over its parameter hypotheses.
        initial: State the rollouts start from.
        warm_start: (horizon_steps, n_controls) seed sequence; clipped to the
            control box before use.
        sampler: Candidate distribution settings.
        rng: Consumed identically regardless of pool size.
        pool: Optional worker pool for rollout chunks.

    Returns:
        PlanResult with the best sequence scored across all iterations,
        counting each iteration's incumbent mean and the final refined mean.
        When every candidate diverges the least-bad one is still returned:
        divergent rollouts carry ranked costs above the blowup floor, and
        aborting is the plant's call, not the planner's.

    Raises:
        PlanningFailure: Propagated from objectives whose reduction cannot
            produce a finite score.
    """
    env = objective.env
    lo = env.control_lower_array
    hi = env.control_upper_array
    T = sampler.horizon_steps
    nu = env.n_controls
    warm = np.clip(np.asarray(warm_start, dtype=np.float64), lo, hi)
    if warm.shape != (T, nu):
        raise ConfigurationError(
            f"warm start shape {warm.shape} does not match ({T}, {nu})"
        )
    std = np.asarray(sampler.noise_std, dtype=np.float64)
    if std.shape != (nu,):
        raise ConfigurationError(
            f"noise std has {std.shape[0]} entries for {nu} controls"
        )

    started = time.perf_counter()
    base = warm
    best_controls = warm
    best_value = np.inf
    best_gaps: NDArray[np.float64] | None = None
    K = sampler.n_candidates

    def consider(
        values: NDArray[np.float64],
        candidates: NDArray[np.float64],
        gaps: NDArray[np.float64] | None,
    ) -> int:
        nonlocal best_value, best_controls, best_gaps
        j = int(np.argmin(values))
        if values[j] < best_value:
            best_value = float(values[j])
            best_controls = candidates[j].copy()
            best_gaps = None if gaps is None else gaps[j].copy()
        return j

    alpha = sampler.noise_correlation
    innovation = np.sqrt(1.0 - alpha * alpha)
    for _ in range(sampler.iterations):
        noise = rng.standard_normal((K, T, nu))
        # Stationary AR(1) along the horizon: per-step std stays 1, but
        # perturbations persist long enough to express sustained pushes.
        for k in range(1, T):
            noise[:, k] = alpha * noise[:, k - 1] + innovation * noise[:, k]
        noise *= std
        candidates = np.clip(base[None, :, :] + noise, lo, hi)
        # Reserved slots: the incumbent mean rides along so each refined mean
        # gets scored, the best single sequence so far is never lost, and the
        # all-zero sequence anchors the search to the passive fallback, so the
        # returned plan never scores worse than doing nothing.
        candidates[0] = base
        if K > 1:
            candidates[1] = best_controls if np.isfinite(best_value) else base
        if K > 2:
            candidates[2] = np.clip(np.zeros((T, nu)), lo, hi)
        values, gaps, blown = objective.evaluate(initial, candidates, pool)
        j = consider(values, candidates, gaps)
        # Temperature is relative to the live candidates' spread, so the
        # weighting is invariant to the objective's absolute scale and blown
        # candidates (cost-floored far above everyone) get zero weight.
        live = values[~blown] if not blown.all() else values
        spread = float(live.mean()) - float(values[j])
        scale = sampler.temperature * max(spread, 1.0e-12)
        weights = np.exp(-(values - values[j]) / scale)
        base = np.clip(
            np.einsum("k,ktu->tu", weights, candidates) / weights.sum(), lo, hi
        )
    values, gaps, _ = objective.evaluate(initial, base[None, :, :], pool)
    consider(values, base[None, :, :], gaps)
    return PlanResult(
        controls=best_controls,
        objective=best_value,
        gaps=best_gaps,
        duration=time.perf_counter() - started,
    )


def shift_warm_start(
    controls: NDArray[np.float64], executed: int
) -> NDArray[np.float64]:
    """Advance a plan past its executed prefix, padding with zeros.

    Zero is the neutral continuation: holding the last control instead bakes
    the plan's final transient into the next cycle's incumbent, and on an
    unstable plant the sampler cannot always walk back from that tail.
    """
    if not 0 <= executed <= controls.shape[0]:
        raise ConfigurationError("executed steps outside the plan horizon")
    if executed == 0:
        return np.array(controls, dtype=np.float64)
    tail = np.zeros((executed, controls.shape[1]))
    return np.vstack([controls[executed:], tail])
