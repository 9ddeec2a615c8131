"""Value types shared across the dynamics stack.

Everything here is immutable (frozen dataclasses over read-only arrays), so
instances can be shared freely between worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigurationError


def _frozen_array(values, shape_hint: str) -> NDArray[np.float64]:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"non-finite entries in {shape_hint}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhysParams:
    """A point theta in physical-parameter space.

    Attributes:
        mass: kg.
        inertia: kg m^2 about the center of mass.
        com_offset: Center-of-mass position in the object's geometric body
            frame, m. Zero for environments that do not vary it.
        friction: Dimensionless Coulomb coefficient of the object's sliding
            contacts. Environments that fix friction carry the nominal value.
    """

    mass: float
    inertia: float
    com_offset: tuple[float, float] = (0.0, 0.0)
    friction: float = 0.5

    def __post_init__(self) -> None:
        if self.friction < 0.0:
            raise ConfigurationError("friction must be nonnegative")


@dataclass(frozen=True)
class BodyState:
    """Poses and twists of every body in an environment.

    Poses are geometric-frame poses (x, y, heading): the coordinates a tracker
    would report, independent of any body's center-of-mass offset. Twists are
    (vx, vy, omega) of the same frames.
    """

    poses: NDArray[np.float64]
    twists: NDArray[np.float64]

    def __post_init__(self) -> None:
        poses = _frozen_array(self.poses, "poses")
        twists = _frozen_array(self.twists, "twists")
        if poses.shape != twists.shape or poses.ndim != 2 or poses.shape[1] != 3:
            raise ConfigurationError("poses and twists must both be (n_bodies, 3)")
        object.__setattr__(self, "poses", poses)
        object.__setattr__(self, "twists", twists)

    @property
    def n_bodies(self) -> int:
        return self.poses.shape[0]


@dataclass(frozen=True)
class ContactImpulse:
    """One resolved contact: impulses in N s, point in world coordinates."""

    normal: float
    tangential: float
    contact_point: tuple[float, float]
    active_gap: float


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step semi-implicit Euler settings."""

    dt: float = 0.025
    substeps: int = 4

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")
        if self.substeps < 1:
            raise ConfigurationError("substeps must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """A rollout: states over time plus the controls and impulses that made it.

    Attributes:
        poses: (T+1, n_bodies, 3) geometric poses.
        twists: (T+1, n_bodies, 3) twists.
        controls: (T, n_u) applied controls.
        impulse_normals: (T, n_slots) per-step summed normal impulses per
            contact slot, N s.
        impulse_tangentials: (T, n_slots) matching tangential impulses.
        impulse_points: (T, n_slots, 2) last-substep contact points.
        impulse_gaps: (T, n_slots) last-substep gaps.
        slot_names: Contact slot labels, length n_slots.
    """

    poses: NDArray[np.float64]
    twists: NDArray[np.float64]
    controls: NDArray[np.float64]
    impulse_normals: NDArray[np.float64]
    impulse_tangentials: NDArray[np.float64]
    impulse_points: NDArray[np.float64]
    impulse_gaps: NDArray[np.float64]
    slot_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        for name in (
            "poses",
            "twists",
            "controls",
            "impulse_normals",
            "impulse_tangentials",
            "impulse_points",
            "impulse_gaps",
        ):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]

    def state_at(self, index: int) -> BodyState:
        return BodyState(self.poses[index].copy(), self.twists[index].copy())

    @property
    def final_state(self) -> BodyState:
        return self.state_at(self.poses.shape[0] - 1)

    def impulses_at(self, step: int) -> list[ContactImpulse]:
        """Materialize the step's contact records as ContactImpulse values."""
        out = []
        for s in range(self.impulse_normals.shape[1]):
            out.append(
                ContactImpulse(
                    normal=float(self.impulse_normals[step, s]),
                    tangential=float(self.impulse_tangentials[step, s]),
                    contact_point=(
                        float(self.impulse_points[step, s, 0]),
                        float(self.impulse_points[step, s, 1]),
                    ),
                    active_gap=float(self.impulse_gaps[step, s]),
                )
            )
        return out
