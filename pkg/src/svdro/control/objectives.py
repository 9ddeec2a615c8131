"""The four planning objectives over a shared batched rollout evaluator.

Every objective maps a candidate control sequence to a scalar through rollout
costs under one or more parameter hypotheses:

    nominal   L(tau, theta_bar)
    emppi     (1/N) sum_i L(tau, theta_i), theta_i resampled from the prior
    softdro   beta eps + beta log (1/N) sum_i exp(L(tau, theta_i) / beta)
    svdro     L(tau, theta_bar) + gamma (1/N) sum_i [L(tau, theta_i) - L(tau, theta_bar)]

The identities the tests pin fall straight out: svdro at gamma = 1 is the
emppi mean exactly, at gamma = 0 the nominal cost at the particle mean, and
softdro minus beta eps tends to the emppi mean as beta grows and to the
worst-case cost as beta shrinks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ..dynamics.engine import params_to_row
from ..dynamics.types import BodyState, PhysParams
from ..environments.costs import rollout_cost_batch
from ..environments.specs import EnvSpec
from ..errors import ConfigurationError, PlanningFailure
from ..svgd.particles import ParticleSet
from ..util import WorkPool

OBJECTIVE_KINDS = ("nominal", "emppi", "softdro", "svdro")


@dataclass(frozen=True)
class RobustObjective:
    """A planning objective closed over its parameter hypotheses.

    Attributes:
        kind: One of OBJECTIVE_KINDS.
        env: Environment specification.
        phys: (N, 5) full physical-parameter rows. nominal uses their mean
            only; svdro appends the mean internally as the gap reference.
        gamma: svdro gap weight in [0, 1] (0 reduces to nominal).
        beta: softdro temperature, > 0.
        epsilon: softdro ambiguity radius, >= 0.
    """

    kind: str
    env: EnvSpec
    phys: NDArray[np.float64]
    gamma: float = 1.0
    beta: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in OBJECTIVE_KINDS:
            raise ConfigurationError(f"unknown objective {self.kind!r}")
        phys = np.atleast_2d(np.asarray(self.phys, dtype=np.float64)).copy()
        if phys.ndim != 2 or phys.shape[1] != 5 or phys.shape[0] < 1:
            raise ConfigurationError("parameter hypotheses must be (N, 5)")
        if self.kind == "svdro" and not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError("gamma must be in [0, 1]")
        if self.kind == "softdro" and self.beta <= 0.0:
            raise ConfigurationError("beta must be positive")
        if self.kind == "softdro" and self.epsilon < 0.0:
            raise ConfigurationError("epsilon must be nonnegative")
        phys.setflags(write=False)
        object.__setattr__(self, "phys", phys)

    @property
    def n_hypotheses(self) -> int:
        return self.phys.shape[0]

    def evaluate(
        self,
        initial: BodyState,
        controls: NDArray[np.float64],
        pool: WorkPool | None = None,
    ) -> tuple[NDArray[np.float64], NDArray[np.float64] | None, NDArray[np.bool_]]:
        """Objective value of each candidate control sequence.

        Args:
            initial: Shared initial state.
            controls: (K, T, n_controls) candidates.
            pool: Optional worker pool; never changes the result bytes.

        Returns:
            (values, gaps, blown): values (K,); gaps (K, N) per-hypothesis
            cost excess over the reference (svdro: over the mean row; others:
            over the per-candidate hypothesis mean; nominal: None); blown (K,)
            marks candidates whose evaluation hit a frozen rollout, which
            carry the blowup cost and lose every comparison.
        """
        controls = np.asarray(controls, dtype=np.float64)
        K = controls.shape[0]
        if self.kind == "nominal":
            theta = self.phys.mean(axis=0)
            phys = np.broadcast_to(theta, (K, 5))
            costs, blown = rollout_cost_batch(initial, controls, phys, self.env, pool)
            return costs, None, blown

        N = self.n_hypotheses
        if self.kind == "svdro":
            stacked = np.vstack([self.phys, self.phys.mean(axis=0)])
        else:
            stacked = self.phys
        M = stacked.shape[0]
        big_controls = np.repeat(controls, M, axis=0)
        big_phys = np.tile(stacked, (K, 1))
        costs, blown_rows_ = rollout_cost_batch(
            initial, big_controls, big_phys, self.env, pool
        )
        costs = costs.reshape(K, M)
        blown = blown_rows_.reshape(K, M).any(axis=1)

        if self.kind == "emppi":
            return costs.mean(axis=1), costs - costs.mean(axis=1, keepdims=True), blown
        if self.kind == "softdro":
            shift = costs.max(axis=1)
            values = self.beta * self.epsilon + shift + self.beta * np.log(
                np.mean(np.exp((costs - shift[:, None]) / self.beta), axis=1)
            )
            if not np.all(np.isfinite(values)):
                raise PlanningFailure("softdro objective overflowed despite max-shift")
            return values, costs - costs.mean(axis=1, keepdims=True), blown
        base = costs[:, N]
        gaps = costs[:, :N] - base[:, None]
        return base + self.gamma * gaps.mean(axis=1), gaps, blown


def _phys_rows(samples: Sequence[PhysParams]) -> NDArray[np.float64]:
    return np.stack([params_to_row(p) for p in samples])


def objective_nominal(
    controls: NDArray[np.float64], x0: BodyState, mean: PhysParams, env: EnvSpec
) -> float:
    """Rollout cost of one control sequence under the mean hypothesis."""
    obj = RobustObjective(kind="nominal", env=env, phys=params_to_row(mean)[None, :])
    values, _, _ = obj.evaluate(x0, np.asarray(controls)[None, :, :])
    return float(values[0])


def objective_emppi(
    controls: NDArray[np.float64],
    x0: BodyState,
    samples: Sequence[PhysParams],
    env: EnvSpec,
) -> float:
    """Mean rollout cost over an ensemble of parameter samples."""
    obj = RobustObjective(kind="emppi", env=env, phys=_phys_rows(samples))
    values, _, _ = obj.evaluate(x0, np.asarray(controls)[None, :, :])
    return float(values[0])


def objective_softdro(
    controls: NDArray[np.float64],
    x0: BodyState,
    samples: Sequence[PhysParams],
    beta: float,
    epsilon: float,
    env: EnvSpec,
) -> float:
    """Dual-form distributionally robust cost over an ensemble."""
    obj = RobustObjective(
        kind="softdro", env=env, phys=_phys_rows(samples), beta=beta, epsilon=epsilon
    )
    values, _, _ = obj.evaluate(x0, np.asarray(controls)[None, :, :])
    return float(values[0])


def objective_svdro(
    controls: NDArray[np.float64],
    x0: BodyState,
    particles: ParticleSet,
    gamma: float,
    env: EnvSpec,
) -> float:
    """Mean-referenced robust cost over a transported particle set."""
    obj = RobustObjective(
        kind="svdro", env=env, phys=particles.phys_matrix(), gamma=gamma
    )
    values, _, _ = obj.evaluate(x0, np.asarray(controls)[None, :, :])
    return float(values[0])
