"""Smooth spring-like contact impulses.

The normal channel is a softplus spring with velocity damping, multiplied by
a sigmoid window so the force vanishes identically (below 1e-6 of the contact
scale) once the gap exceeds six smoothing widths. The tangential channel is a
smooth Coulomb law, an odd saturating function of slip velocity bounded by
friction times the normal impulse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigurationError
from .types import ContactImpulse, PhysParams

# Window constants: sigmoid(WINDOW_GAIN * (x + WINDOW_CENTER)) of x = -gap/sigma.
# At gap = 0 the window is 1 - 8.3e-7 (preserving the softplus value at contact)
# and at gap = 6 sigma the windowed spring is ~1.1e-7 of the contact scale.
WINDOW_GAIN = 4.0
WINDOW_CENTER = 3.5

# Beyond this many smoothing widths the impulse is set to exactly zero. The
# windowed value there is ~1e-38 of the contact scale, so the cutoff is
# invisible to trajectories but makes out-of-contact states exact equilibria.
CUTOFF_WIDTHS = 20.0


@dataclass(frozen=True)
class ContactConfig:
    """Constants of the smooth contact model.

    Attributes:
        stiffness: Normal spring stiffness, N/m.
        smoothing_width: Softplus width sigma, m.
        tangential_smoothness: Slope of the smooth Coulomb saturation, s/m.
        restitution_damping: Normal velocity damping, N s/m.
        tangential_slack: Bound on |tangential| / (friction * normal) - 1.
            Zero for the tanh law used here; kept explicit because tests pin it.
    """

    stiffness: float = 1.0e3
    smoothing_width: float = 2.0e-3
    tangential_smoothness: float = 50.0
    restitution_damping: float = 10.0
    tangential_slack: float = 0.0

    def __post_init__(self) -> None:
        if min(
            self.stiffness,
            self.smoothing_width,
            self.tangential_smoothness,
            self.restitution_damping,
        ) <= 0.0:
            raise ConfigurationError("contact constants must be strictly positive")


def softplus(x: NDArray[np.float64] | float) -> NDArray[np.float64]:
    """Numerically stable log(1 + exp(x))."""
    x = np.asarray(x, dtype=np.float64)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def sigmoid(x: NDArray[np.float64] | float) -> NDArray[np.float64]:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def contact_window(x: NDArray[np.float64] | float) -> NDArray[np.float64]:
    """Inactivity window over x = -gap/sigma; ~1 in contact, ~0 beyond 6 sigma."""
    return sigmoid(WINDOW_GAIN * (np.asarray(x, dtype=np.float64) + WINDOW_CENTER))


def normal_impulse(
    gap: NDArray[np.float64],
    normal_velocity: NDArray[np.float64],
    config: ContactConfig,
    dt: float,
) -> NDArray[np.float64]:
    """Windowed softplus spring impulse with damping, floored at zero.

    Args:
        gap: Separation distances, m (negative when penetrating).
        normal_velocity: Relative normal velocities, m/s, positive separating.
        config: Contact constants.
        dt: Effective timestep converting force to impulse, s.

    Returns:
        Nonnegative normal impulses, N s.
    """
    x = -np.asarray(gap, dtype=np.float64) / config.smoothing_width
    live = x > -CUTOFF_WIDTHS
    if not live.any():
        return np.zeros_like(x)
    spring = config.stiffness * config.smoothing_width * softplus(x)
    force = np.maximum(spring - config.restitution_damping * normal_velocity, 0.0)
    return np.where(live, dt * contact_window(x) * force, 0.0)


def tangential_impulse(
    normal: NDArray[np.float64],
    slip_velocity: NDArray[np.float64],
    friction: NDArray[np.float64] | float,
    config: ContactConfig,
) -> NDArray[np.float64]:
    """Smooth Coulomb impulse opposing slip, bounded by friction * normal."""
    sat = np.tanh(config.tangential_smoothness * np.asarray(slip_velocity))
    return -friction * normal * sat


def soft_contact_impulse(
    gap: float,
    relative_velocity: tuple[float, float],
    params: PhysParams,
    config: ContactConfig,
    dt: float = 0.025,
    contact_point: tuple[float, float] = (0.0, 0.0),
) -> ContactImpulse:
    """Resolve one contact into normal and tangential impulses.

    Args:
        gap: Signed separation, m; negative means penetration.
        relative_velocity: (normal, tangential) relative velocity, m/s;
            normal component positive when separating.
        params: Physical parameters supplying the friction coefficient.
        config: Contact constants.
        dt: Effective timestep, s.
        contact_point: World point recorded on the impulse.

    Returns:
        ContactImpulse with normal >= 0 and |tangential| <= friction * normal.
    """
    vn, vt = relative_velocity
    n = normal_impulse(np.asarray([gap]), np.asarray([float(vn)]), config, dt)[0]
    t = tangential_impulse(n, np.asarray([float(vt)]), params.friction, config)[0]
    return ContactImpulse(float(n), float(t), contact_point, float(gap))


def contact_impulse_derivatives(
    gap: float,
    relative_velocity: tuple[float, float],
    params: PhysParams,
    config: ContactConfig,
    dt: float = 0.025,
) -> dict[str, float]:
    """Analytic derivatives of the impulse map.

    Returns partials of the normal and tangential impulses with respect to gap
    and of the tangential impulse with respect to friction, valid away from
    the damping floor's kink (which has measure zero).
    """
    vn, vt = relative_velocity
    sigma = config.smoothing_width
    x = -gap / sigma
    if x <= -CUTOFF_WIDTHS:
        return {
            "d_normal_d_gap": 0.0,
            "d_tangential_d_gap": 0.0,
            "d_tangential_d_friction": 0.0,
        }
    w = float(contact_window(x))
    sp = float(softplus(x))
    sig = float(sigmoid(x))
    spring = config.stiffness * sigma * sp
    z = spring - config.restitution_damping * vn
    floor = max(z, 0.0)
    dw_dgap = -(WINDOW_GAIN / sigma) * w * (1.0 - w)
    dz_dgap = -config.stiffness * sig
    dn_dgap = dt * (dw_dgap * floor + w * (dz_dgap if z > 0.0 else 0.0))
    sat = float(np.tanh(config.tangential_smoothness * vt))
    n = dt * w * floor
    return {
        "d_normal_d_gap": dn_dgap,
        "d_tangential_d_gap": -params.friction * sat * dn_dgap,
        "d_tangential_d_friction": -n * sat,
    }
