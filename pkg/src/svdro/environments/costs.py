"""Quadratic task costs and the fused rollout-cost evaluation.

The cost of a trajectory is a sum of per-step quadratic forms on a
task-specific error vector, the control, and the recorded contact impulses,
plus a terminal form. The push task additionally pays the squared
effector-to-object separation, which attracts effectors toward the object.

Two evaluation paths exist on purpose: scalar per-step functions that mirror
the definitions (used by tests and single replays), and a fused batched
rollout that never materializes trajectories (used by the planner and the
inference replays). Both are pure; the batched path is row-independent, so
chunked parallel evaluation is bit-identical to serial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from ..dynamics.engine import PushTPhysics, TrayPhysics, blown_rows, step_batch
from ..dynamics.types import BodyState, ContactImpulse, Trajectory
from ..errors import ConfigurationError
from ..util import WorkPool

if TYPE_CHECKING:
    from .specs import EnvSpec

# Cost assigned to a rollout whose integration blew up: finite so softmax
# weighting and finite-difference scores stay defined, large enough that no
# surviving candidate can lose to a blown one.
BLOWUP_COST = 1.0e9

# The quadratic forms measure every error component in centimeters:
# positions, linear velocities, impulses, and contact gaps are scaled by this
# factor directly, and angles and angular rates enter as the arc displacement
# they produce at the body's characteristic radius (the tray's half-length,
# the object's radius, the block's largest vertex radius), so a tilt that
# sweeps the tray rim through 5 cm costs what a 5 cm translation costs. The
# task weight tables assume this scale; in meter units the position stakes at
# centimeter-level errors would be smaller than the control cost of any
# maneuver and no motion would ever pay for itself, while unscaled radians
# would price a runaway tilt below a millimeter of translation error.
METERS_TO_CM = 100.0

TRAY_ERROR_DIM = 12
PUSHT_ERROR_DIM = 6


@dataclass(frozen=True)
class CostWeights:
    """Diagonal weights of the running and terminal quadratic forms.

    Attributes:
        q: Running state weights over the task error vector.
        qf: Terminal state weights, same layout as q.
        r: Control weights; may cover one actuator group and tile across the
            control vector (the push task weights one effector and applies the
            same diagonal to both).
        n_contact: (normal, tangential) weights applied to every recorded
            contact slot's squared impulses.
        attract_slots: Contact slots whose squared gap is added to the running
            cost, pulling the associated bodies together.
    """

    q: tuple[float, ...]
    qf: tuple[float, ...]
    r: tuple[float, ...]
    n_contact: tuple[float, float]
    attract_slots: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for label, vec in (("q", self.q), ("qf", self.qf), ("r", self.r)):
            if len(vec) == 0 or any(w < 0.0 for w in vec):
                raise ConfigurationError(f"{label} weights must be nonnegative")
        if len(self.n_contact) != 2 or any(w < 0.0 for w in self.n_contact):
            raise ConfigurationError("n_contact must be two nonnegative weights")
        if len(self.q) != len(self.qf):
            raise ConfigurationError("q and qf must have equal length")
        if any(s < 0 for s in self.attract_slots):
            raise ConfigurationError("attract slots must be nonnegative indices")

    def validate_for(self, physics: TrayPhysics | PushTPhysics) -> None:
        """Raise unless the weight dimensions match the environment."""
        dim = TRAY_ERROR_DIM if isinstance(physics, TrayPhysics) else PUSHT_ERROR_DIM
        if len(self.q) != dim:
            raise ConfigurationError(
                f"q has {len(self.q)} entries, environment error has {dim}"
            )
        if physics.n_controls % len(self.r) != 0:
            raise ConfigurationError(
                f"r with {len(self.r)} entries cannot tile {physics.n_controls} controls"
            )
        if any(s >= len(physics.slot_names) for s in self.attract_slots):
            raise ConfigurationError("attract slot index out of range")

    def r_full(self, n_controls: int) -> NDArray[np.float64]:
        reps = n_controls // len(self.r)
        return np.tile(np.asarray(self.r, dtype=np.float64), reps)


def wrap_angle(a: NDArray[np.float64]) -> NDArray[np.float64]:
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


_BLOCK_RADIUS_CACHE: dict[tuple[float, float, float], float] = {}


def _block_radius(ph: PushTPhysics) -> float:
    key = (ph.block_height, ph.block_width, ph.block_thickness)
    r = _BLOCK_RADIUS_CACHE.get(key)
    if r is None:
        r = float(np.linalg.norm(ph.block_polygon().vertices, axis=1).max())
        _BLOCK_RADIUS_CACHE[key] = r
    return r


def error_vectors(
    poses: NDArray[np.float64],
    twists: NDArray[np.float64],
    goal: NDArray[np.float64],
    physics: TrayPhysics | PushTPhysics,
) -> NDArray[np.float64]:
    """Task error vectors for a batch of states.

    Tray layout (12): object pose relative to the tray, in the tray frame,
    minus the goal; object twist relative to the tray, in the tray frame;
    tray world pose; tray twist. Push layout (6): object world pose minus the
    goal (heading wrapped); object twist. Every component is a centimeter
    displacement: positions and velocities via METERS_TO_CM, angles and
    angular rates as the arc swept at the body's characteristic radius (the
    object's radius for its heading, the tray's half-length for tilt, the
    block's largest vertex radius for its heading).

    Args:
        poses: (B, n_bodies, 3) geometric poses.
        twists: (B, n_bodies, 3) twists.
        goal: (3,) goal pose, in meters and radians.
        physics: Environment constants selecting the layout.

    Returns:
        (B, 12) or (B, 6) error array.
    """
    cm = METERS_TO_CM
    if isinstance(physics, TrayPhysics):
        arm_o = cm * physics.object_radius
        arm_t = cm * physics.tray_half_length
        p_t, th_t = poses[:, 0, :2], poses[:, 0, 2]
        p_o, th_o = poses[:, 1, :2], poses[:, 1, 2]
        c, s = np.cos(th_t), np.sin(th_t)
        d = p_o - p_t
        rel_x = c * d[:, 0] + s * d[:, 1]
        rel_y = -s * d[:, 0] + c * d[:, 1]
        dv = twists[:, 1, :2] - twists[:, 0, :2]
        rel_vx = c * dv[:, 0] + s * dv[:, 1]
        rel_vy = -s * dv[:, 0] + c * dv[:, 1]
        return np.stack(
            [
                cm * (rel_x - goal[0]),
                cm * (rel_y - goal[1]),
                arm_o * wrap_angle(th_o - th_t - goal[2]),
                cm * rel_vx,
                cm * rel_vy,
                arm_o * (twists[:, 1, 2] - twists[:, 0, 2]),
                cm * p_t[:, 0],
                cm * p_t[:, 1],
                arm_t * wrap_angle(th_t),
                cm * twists[:, 0, 0],
                cm * twists[:, 0, 1],
                arm_t * twists[:, 0, 2],
            ],
            axis=-1,
        )
    arm_b = cm * _block_radius(physics)
    return np.concatenate(
        [
            cm * (poses[:, 2, :2] - goal[None, :2]),
            arm_b * wrap_angle(poses[:, 2, 2] - goal[2])[:, None],
            cm * twists[:, 2, :2],
            arm_b * twists[:, 2, 2:],
        ],
        axis=-1,
    )


def _state_arrays(state: BodyState) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    return state.poses[None, :, :], state.twists[None, :, :]


def _physics_for(state_bodies: int) -> TrayPhysics | PushTPhysics:
    # Scalar entry points dispatch on body count: 2 bodies is the tray task,
    # 3 the push task.
    if state_bodies == 2:
        return TrayPhysics()
    if state_bodies == 3:
        return PushTPhysics()
    raise ConfigurationError(f"no task with {state_bodies} bodies")


def running_cost(
    state: BodyState,
    control: NDArray[np.float64],
    impulses: list[ContactImpulse],
    goal: NDArray[np.float64],
    weights: CostWeights,
) -> float:
    """One step of the running cost.

    Args:
        state: Bodies at the step.
        control: Control vector applied at the step.
        impulses: Recorded contact impulses, one per slot.
        goal: Goal pose.
        weights: Diagonal weights; q length selects the task layout.

    Returns:
        Nonnegative scalar (for nonnegative weights).
    """
    physics = _physics_for(state.n_bodies)
    weights.validate_for(physics)
    poses, twists = _state_arrays(state)
    e = error_vectors(poses, twists, np.asarray(goal, dtype=np.float64), physics)[0]
    q = np.asarray(weights.q)
    u = np.asarray(control, dtype=np.float64)
    if u.shape[0] != physics.n_controls:
        raise ConfigurationError(
            f"control has {u.shape[0]} entries, expected {physics.n_controls}"
        )
    total = float(e @ (q * e) + u @ (weights.r_full(u.shape[0]) * u))
    wn, wt = weights.n_contact
    cm2 = METERS_TO_CM**2
    for imp in impulses:
        total += cm2 * (wn * imp.normal**2 + wt * imp.tangential**2)
    for slot in weights.attract_slots:
        total += cm2 * impulses[slot].active_gap ** 2
    return total


def terminal_cost(
    state: BodyState, goal: NDArray[np.float64], weights: CostWeights
) -> float:
    """Terminal quadratic form with the qf weights."""
    physics = _physics_for(state.n_bodies)
    weights.validate_for(physics)
    poses, twists = _state_arrays(state)
    e = error_vectors(poses, twists, np.asarray(goal, dtype=np.float64), physics)[0]
    qf = np.asarray(weights.qf)
    return float(e @ (qf * e))


def trajectory_cost(traj: Trajectory, params: object, env: "EnvSpec") -> float:
    """Total cost of a rolled-out trajectory.

    The parameters influence the cost only through the trajectory they
    produced; they are accepted to mirror the evaluation contract.

    Args:
        traj: Rollout of length T.
        params: Physical parameters the trajectory was produced under.
        env: Environment specification.

    Returns:
        Sum of per-step running costs and the terminal cost.
    """
    del params
    goal = env.goal_array
    total = 0.0
    for t in range(traj.horizon):
        total += running_cost(
            traj.state_at(t), traj.controls[t], traj.impulses_at(t), goal, env.weights
        )
    return total + terminal_cost(traj.final_state, goal, env.weights)


def _rollout_cost_rows(
    start: int,
    stop: int,
    poses0: NDArray[np.float64],
    twists0: NDArray[np.float64],
    controls: NDArray[np.float64],
    phys: NDArray[np.float64],
    env: "EnvSpec",
) -> NDArray[np.float64]:
    """Fused cost of rows [start, stop); returns (rows, 2) of (cost, blown)."""
    poses = poses0[start:stop].copy()
    twists = twists0[start:stop].copy()
    ctrl = controls[start:stop]
    theta = phys[start:stop]
    B, T = ctrl.shape[0], ctrl.shape[1]
    goal = env.goal_array
    weights = env.weights
    q = np.asarray(weights.q)
    qf = np.asarray(weights.qf)
    r = weights.r_full(env.physics.n_controls)
    wn, wt = weights.n_contact
    attract = list(weights.attract_slots)
    cm2 = METERS_TO_CM**2

    costs = np.zeros(B)
    blown = np.zeros(B, dtype=bool)
    for t in range(T):
        e = error_vectors(poses, twists, goal, env.physics)
        u = ctrl[:, t, :]
        step_cost = np.einsum("bi,i,bi->b", e, q, e) + np.einsum(
            "bi,i,bi->b", u, r, u
        )
        new_poses, new_twists, imp_n, imp_t, _, imp_g = step_batch(
            poses, twists, u, theta, env.physics, env.contact, env.integrator
        )
        step_cost += cm2 * (
            wn * np.sum(imp_n * imp_n, axis=1) + wt * np.sum(imp_t * imp_t, axis=1)
        )
        for slot in attract:
            step_cost += cm2 * imp_g[:, slot] ** 2
        costs += step_cost
        blown |= blown_rows(poses, twists, new_poses, new_twists)
        poses, twists = new_poses, new_twists

    e = error_vectors(poses, twists, goal, env.physics)
    costs += np.einsum("bi,i,bi->b", e, qf, e)
    # Added, not assigned: divergent rows stay ranked among themselves by
    # how much damage accrued before and after the freeze.
    costs[blown] += BLOWUP_COST
    return np.stack([costs, blown.astype(np.float64)], axis=-1)


def rollout_cost_batch(
    initial: BodyState,
    controls: NDArray[np.float64],
    phys: NDArray[np.float64],
    env: "EnvSpec",
    pool: WorkPool | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Cost of rolling each control sequence under its own parameters.

    Args:
        initial: Shared initial state.
        controls: (B, T, n_controls) candidate sequences.
        phys: (B, 5) physical-parameter rows.
        env: Environment specification.
        pool: Optional worker pool; chunking never changes the result bytes.

    Returns:
        (costs, blown): (B,) total costs and the mask of rows whose
        integration froze; those rows carry at least BLOWUP_COST.
    """
    controls = np.asarray(controls, dtype=np.float64)
    B = controls.shape[0]
    poses0 = np.broadcast_to(initial.poses, (B, *initial.poses.shape))
    twists0 = np.broadcast_to(initial.twists, (B, *initial.twists.shape))
    if pool is None or pool.workers <= 1 or B < 2 * pool.workers:
        out = _rollout_cost_rows(0, B, poses0, twists0, controls, phys, env)
    else:
        out = pool.map_rows(
            _rollout_cost_rows, B, poses0, twists0, controls, phys, env
        )
    return out[:, 0], out[:, 1] > 0.5
