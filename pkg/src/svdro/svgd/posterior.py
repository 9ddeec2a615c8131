"""The task-aware parameter posterior and its finite-difference score.

After a plan has been committed, the question "which parameter hypotheses
matter" is answered by the optimality gap: how much worse the frozen plan's
open-loop replay scores under a hypothesis theta than under the particle
mean. The unnormalized posterior multiplies the prior by exp(+gap), placing
mass on the hypotheses most consequential for the task; its normalizer cancels
in the score, and the uniform box prior contributes zero interior score, so
the transport only ever needs the gap gradient.

The gradient is taken by central finite differences over replay rollouts
rather than by differentiating through the simulator: every probe is an
ordinary rollout, so the score is oracle-checkable against refined steps and
independent of how the dynamics are implemented.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..dynamics.engine import rollout
from ..dynamics.types import BodyState, PhysParams, Trajectory
from ..environments.costs import rollout_cost_batch, trajectory_cost
from ..environments.specs import EnvSpec, ParamPrior
from ..errors import ConfigurationError, PlanningFailure
from ..util import WorkPool
from .particles import ParticleSet

FD_STEP_REL = 1.0e-3


def optimality_gap(
    plan: Trajectory, params: PhysParams, particles: ParticleSet, env: EnvSpec
) -> float:
    """Replay-cost excess of a hypothesis over the particle mean.

    Both terms re-roll the plan's control sequence open loop from the plan's
    initial state, under the hypothesis and under the particle mean. Zero
    when params equals the mean, whatever the plan.
    """
    x0 = plan.state_at(0)
    cost_theta = trajectory_cost(rollout(x0, plan.controls, params, env), params, env)
    mean = particles.mean_params()
    cost_mean = trajectory_cost(rollout(x0, plan.controls, mean, env), mean, env)
    return cost_theta - cost_mean


@dataclass(frozen=True)
class PosteriorModel:
    """Frozen-plan posterior: log p'(theta) = log p(theta) + gap(theta) + const.

    Attributes:
        controls: (T, n_controls) committed control sequence.
        initial: State the plan starts from.
        env: Environment specification (costs, dynamics, prior).
        gap_scale: Score temperature; scales the gap inside the posterior
            only. Zero disables the score entirely.
        gap_sign: +1 places mass on high-gap (consequential) hypotheses, the
            transport direction used throughout; -1 is exposed for study.
        fd_step_rel: Central-difference step as a fraction of each prior
            dimension's scale.
    """

    controls: NDArray[np.float64]
    initial: BodyState
    env: EnvSpec
    gap_scale: float = 1.0
    gap_sign: float = 1.0
    fd_step_rel: float = FD_STEP_REL

    def __post_init__(self) -> None:
        controls = np.asarray(self.controls, dtype=np.float64)
        if controls.ndim != 2 or controls.shape[1] != self.env.n_controls:
            raise ConfigurationError(
                f"plan controls must be (T, {self.env.n_controls})"
            )
        if self.fd_step_rel <= 0.0:
            raise ConfigurationError("finite-difference step must be positive")
        controls = controls.copy()
        controls.setflags(write=False)
        object.__setattr__(self, "controls", controls)

    @staticmethod
    def from_plan(plan: Trajectory, env: EnvSpec, **kw) -> "PosteriorModel":
        return PosteriorModel(
            controls=plan.controls, initial=plan.state_at(0), env=env, **kw
        )

    @property
    def prior(self) -> ParamPrior:
        return self.env.prior

    def replay_costs(
        self, rows: NDArray[np.float64], pool: WorkPool | None = None
    ) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
        """Open-loop replay cost of the frozen plan under each parameter row."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        B = rows.shape[0]
        controls = np.broadcast_to(
            self.controls, (B, *self.controls.shape)
        )
        return rollout_cost_batch(
            self.initial, controls, self.prior.full_matrix(rows), self.env, pool
        )

    def gap_rows(
        self,
        rows: NDArray[np.float64],
        reference: NDArray[np.float64],
        pool: WorkPool | None = None,
    ) -> NDArray[np.float64]:
        """Replay-cost gaps of rows against a reference row, in one batch."""
        rows = np.atleast_2d(rows)
        stacked = np.vstack([rows, np.atleast_2d(reference)])
        costs, _ = self.replay_costs(stacked, pool)
        return costs[:-1] - costs[-1]

    def score_rows(
        self, rows: NDArray[np.float64], pool: WorkPool | None = None
    ) -> NDArray[np.float64]:
        """Posterior score at each row, in normalized coordinates.

        Central differences with per-dimension step fd_step_rel * scale; the
        2 * dim probes per row are replay rollouts evaluated in one batch
        (chunkable across a pool without changing the result). The uniform
        prior has zero interior score, so only the gap term appears.

        Returns:
            (N, dim) array of d log p' / dz, z the prior-normalized
            coordinates.

        Raises:
            PlanningFailure: If a probe rollout blew up, naming the particle
                and the offending dimension.
        """
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        n, dim = rows.shape
        if self.gap_scale == 0.0:
            return np.zeros((n, dim))
        scales = self.prior.scales
        steps = self.fd_step_rel * scales

        probes = np.repeat(rows, 2 * dim, axis=0).reshape(n, dim, 2, dim)
        for j in range(dim):
            probes[:, j, 0, j] += steps[j]
            probes[:, j, 1, j] -= steps[j]
        costs, blown = self.replay_costs(probes.reshape(-1, dim), pool)
        if blown.any():
            i, j, _ = np.unravel_index(int(np.argmax(blown)), (n, dim, 2))
            raise PlanningFailure(
                f"score probe rollout blew up (particle {i}, "
                f"dimension {self.prior.names[j]!r})"
            )
        costs = costs.reshape(n, dim, 2)
        grad_box = (costs[:, :, 0] - costs[:, :, 1]) / (2.0 * steps)
        return self.gap_sign * self.gap_scale * grad_box * scales
