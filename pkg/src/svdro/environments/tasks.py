"""The two benchmark tasks and their episode-level protocol functions.

Both tasks are planar and contact-rich. "tray": a tilting tray held in the
vertical plane carries a cylinder that must settle at the tray center;
gravity does the moving once the tray tilts past the friction angle, and
rims at both ends keep the object aboard. "pusht": two force-controlled
effectors push a T-shaped block to a world goal pose on a horizontal table.

The functions here define the benchmark protocol: how episodes start, what a
noisy observation is, and what counts as success.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ..dynamics.contact import ContactConfig
from ..dynamics.engine import GRAVITY, PushTPhysics, TrayPhysics
from ..dynamics.geometry import box_union_sdf, t_block_boxes
from ..dynamics.types import BodyState, PhysParams
from ..errors import ConfigurationError
from .costs import CostWeights
from .specs import EnvSpec, ParamPrior

# Effector home positions, behind and astride the block's sampling region.
_EE_HOMES = ((-0.55, 0.15), (-0.55, -0.15))
_EE_CLEARANCE = 0.01

# The object never starts closer to the goal than the finest success
# threshold; starts inside it would score as instant successes for every
# controller. The upper bound stays clear of the rims so every draw starts
# free of contact.
_TRAY_START_MIN = 0.02
_TRAY_START_MAX = 0.04

# Surface friction of the tray plate. A deliberately slick surface: the slip
# tilt is under two degrees, so a small uphill tilt slides the object toward
# the goal fast enough to pay for itself within one planning horizon. With a
# grippier plate the payoff arrives after the horizon ends and the planner
# prefers exploiting the tilt transient, which loses the object.
_TRAY_FRICTION = 0.05

_PUSHT_GOAL = (0.35, 0.35, 0.0)
_PUSHT_START_BOUND = 0.3


def make_tray_env() -> EnvSpec:
    """Within-hand tray positioning with mass, inertia, and center-of-mass
    uncertainty."""
    return EnvSpec(
        name="tray",
        physics=TrayPhysics(),
        goal=(0.0, 0.0, 0.0),
        weights=CostWeights(
            q=(15.0, 0.0, 5.0, 0.01, 0.01, 0.1, 0.0, 0.0, 5.0, 0.01, 0.01, 0.1),
            qf=(15.0, 0.0, 5.0, 0.01, 0.01, 0.1, 0.0, 0.0, 5.0, 0.01, 0.01, 0.1),
            r=(15.0, 20.0, 20.0),
            n_contact=(0.001, 0.001),
        ),
        prior=ParamPrior(
            names=("mass", "inertia", "com_x", "com_y"),
            lower=(5.0e-2, -1.0e-4, -1.2e-2, -2.5e-2),
            upper=(1.0, 1.0, 1.2e-2, 2.5e-2),
            base=PhysParams(
                mass=0.525,
                inertia=0.49995,
                com_offset=(0.0, 0.0),
                friction=_TRAY_FRICTION,
            ),
        ),
        control_lower=(-5.0, -0.2, -0.5),
        control_upper=(5.0, 0.2, 0.5),
        spatial_bound=0.125,
        horizon_s=0.375,
        total_time_s=12.5,
        execution_window=10,
        obs_noise_std=0.01,
    )


def make_pusht_env() -> EnvSpec:
    """Bimanual block pushing with mass and inertia uncertainty."""
    return EnvSpec(
        name="pusht",
        physics=PushTPhysics(),
        goal=_PUSHT_GOAL,
        weights=CostWeights(
            q=(5.0, 5.0, 2.0, 0.0, 0.0, 0.0),
            qf=(5.0, 5.0, 2.0, 0.5, 0.5, 0.5),
            r=(1.0e-4, 1.0e-4),
            n_contact=(0.1, 0.1),
            attract_slots=(0, 1),
        ),
        prior=ParamPrior(
            names=("mass", "inertia"),
            lower=(-1.0e-4, -1.0e-4),
            upper=(10.0, 10.0),
            base=PhysParams(
                mass=4.99995, inertia=4.99995, com_offset=(0.0, 0.0), friction=0.5
            ),
        ),
        control_lower=(-1.0, -1.0, -1.0, -1.0),
        control_upper=(1.0, 1.0, 1.0, 1.0),
        spatial_bound=0.75,
        horizon_s=0.375,
        total_time_s=10.0,
        execution_window=10,
        obs_noise_std=0.001,
    )


_BUILDERS = {"tray": make_tray_env, "pusht": make_pusht_env}


def make_env(name: str) -> EnvSpec:
    """Build a benchmark environment by name ("tray" or "pusht")."""
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown environment {name!r}; choose from {sorted(_BUILDERS)}"
        ) from None


def initial_state(env: EnvSpec, rng: np.random.Generator) -> BodyState:
    """Sample an episode's initial state.

    Tray: tray level at the origin, object resting on the surface at a
    uniform along-tray offset with |offset| in [0.02, 0.04] m and uniform
    sign, settled at the base-mass equilibrium height (a plant with a
    different true mass sees a millimeter-scale settling transient, identical
    across controllers). The dead zone below 2 cm is excluded deliberately: a
    start inside the success threshold measures nothing. Push: block pose
    uniform within +-0.3 m and +-pi about the origin; effectors at fixed
    homes, displaced deterministically along the block's distance-field
    gradient if a sampled block overlaps them.

    Args:
        env: Environment specification.
        rng: Stream consumed by this call alone.

    Returns:
        Initial BodyState with zero twists.
    """
    if isinstance(env.physics, TrayPhysics):
        offset = rng.uniform(_TRAY_START_MIN, _TRAY_START_MAX)
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        poses = np.zeros((2, 3))
        poses[1, 0] = sign * offset
        poses[1, 1] = _tray_rest_height(env.physics, env.contact, env.prior.base.mass)
        return BodyState(poses=poses, twists=np.zeros((2, 3)))

    block = np.array(
        [
            rng.uniform(-_PUSHT_START_BOUND, _PUSHT_START_BOUND),
            rng.uniform(-_PUSHT_START_BOUND, _PUSHT_START_BOUND),
            rng.uniform(-np.pi, np.pi),
        ]
    )
    poses = np.zeros((3, 3))
    poses[2] = block
    for e, home in enumerate(_EE_HOMES):
        poses[e, :2] = _clear_of_block(np.asarray(home, dtype=np.float64), block, env.physics)
    return BodyState(poses=poses, twists=np.zeros((3, 3)))


def _tray_rest_height(ph: TrayPhysics, contact: ContactConfig, mass: float) -> float:
    """Object-center height where the contact spring balances the weight.

    Inverts force = stiffness * sigma * softplus(-gap / sigma); starting
    settled keeps episode starts quiescent.
    """
    s = mass * GRAVITY / (contact.stiffness * contact.smoothing_width)
    x = float(np.log(np.expm1(s)))
    return ph.object_radius - contact.smoothing_width * x


def _clear_of_block(
    point: NDArray[np.float64], block_pose: NDArray[np.float64], ph: PushTPhysics
) -> NDArray[np.float64]:
    """Move a disc center outside the block along the distance-field gradient."""
    boxes = t_block_boxes(ph.block_height, ph.block_width, ph.block_thickness)
    needed = ph.ee_radius + _EE_CLEARANCE
    c, s = np.cos(block_pose[2]), np.sin(block_pose[2])
    p = point.copy()
    for _ in range(8):
        d = p - block_pose[:2]
        local = np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1]])
        sdf, grad = box_union_sdf(boxes, local[None, :])
        if sdf[0] >= needed:
            break
        g = grad[0]
        step = (needed - sdf[0]) * np.array([c * g[0] - s * g[1], s * g[0] + c * g[1]])
        p = p + step
    return p


def observe(env: EnvSpec, state: BodyState, rng: np.random.Generator) -> BodyState:
    """A noisy plant read: i.i.d. Gaussian noise on every pose component,
    twists exact."""
    noise = rng.normal(0.0, env.obs_noise_std, size=state.poses.shape)
    return BodyState(poses=state.poses + noise, twists=state.twists)


def goal_distance(state: BodyState, goal: NDArray[np.float64]) -> float:
    """Planar distance between the task object and the goal position.

    Tray (2 bodies): along-tray distance from the object to the goal point in
    the tray frame; the height above the surface is set by resting contact,
    not by the controller, so it does not count. Push (3 bodies): world
    distance from the block to the goal.
    """
    goal = np.asarray(goal, dtype=np.float64)
    if state.n_bodies == 2:
        th = state.poses[0, 2]
        c, s = np.cos(th), np.sin(th)
        d = state.poses[1, :2] - state.poses[0, :2]
        return float(np.abs(c * d[0] + s * d[1] - goal[0]))
    if state.n_bodies == 3:
        d = state.poses[2, :2] - goal[:2]
        return float(np.hypot(d[0], d[1]))
    raise ConfigurationError(f"no task with {state.n_bodies} bodies")


def success(state: BodyState, goal: NDArray[np.float64], threshold: float) -> bool:
    """Whether the task object is within the threshold of the goal (closed)."""
    return goal_distance(state, goal) <= threshold
