"""Theta-parameterized planar rigid-body stepping, batched over rollouts.

The engine advances every body of an environment with semi-implicit Euler at
a fixed substep, resolving wall and effector contacts through the smooth
contact model and sliding friction through an implicit smooth-Coulomb
relaxation (fixed Newton iterations, unconditionally stable). All functions
are pure and row-independent across the batch axis, which is what makes
chunked parallel evaluation bit-identical to serial evaluation.

Body poses are geometric-frame poses. Bodies with a nonzero center-of-mass
offset are converted to center-of-mass coordinates internally and back after
integration, so observable state never depends on the parameter estimate.

Sliding support friction and ground drag are internal forces; the reported
contact slots carry the gap-based contacts that the contact cost penalizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from ..errors import IntegrationBlowup
from .contact import ContactConfig, normal_impulse, tangential_impulse
from .geometry import Polygon, box_union_sdf, t_block_boxes, t_block_polygon
from .types import BodyState, IntegratorConfig, PhysParams, Trajectory

if TYPE_CHECKING:
    from ..environments.specs import EnvSpec

# Dynamics-side floors: prior boxes may include nonpositive mass/inertia, and
# the stiffest contact mode must satisfy h * sqrt(k/m) < 2 at the default
# integrator settings.
MASS_FLOOR = 0.05
INERTIA_FLOOR = 5.0e-3

GRAVITY = 9.81

# Divergence guards. A body more than WORKSPACE_MARGIN times the workspace
# half-width from the origin, or any twist component beyond TWIST_LIMIT, marks
# a rollout as physically dead; the row is frozen before numbers can overflow.
# The margin leaves room for legitimate extremes (an object riding a tray
# pressed against its reach limit) while still firing long before overflow.
WORKSPACE_MARGIN = 1.4
TWIST_LIMIT = 25.0

# Canonical physical-parameter columns used by the batched engine.
PHYS_COLS = ("mass", "inertia", "com_x", "com_y", "friction")


@dataclass(frozen=True)
class TrayPhysics:
    """Constants of the within-hand tray task (bodies: tray, object).

    Vertical plane, world y up. The tray is a rimmed plate held by a
    load-compensated mount: contact reactions on the tray's linear motion are
    absorbed by the mount, while their torques act on the wrist, so the
    commanded forces move the tray exactly and the commanded torque fights
    the object's load. The object is a cylinder lying across the tray (a disc
    in this plane) resting under gravity; tilting the tray past the friction
    angle slides it, and the rims at both ends keep it aboard.
    """

    # Plate sized so the rim sits at a lever the wrist can always unload:
    # the heaviest prior mass parked against a rim exerts less torque than
    # the command bound, so a rim visit is recoverable rather than terminal.
    tray_half_length: float = 0.095
    object_radius: float = 0.05
    workspace_half: float = 0.125
    tray_mass: float = 0.4
    # The tilt axis behaves like a velocity-controlled servo: plate inertia
    # with heavy viscous drag (time constant ~27 ms), so torque commands set
    # tilt rate quasi-statically and the axis stores no momentum to slam the
    # rims with. Peak torque clears the worst-case load torque of the object
    # parked on a rim (mg times the rim lever) with margin to right itself.
    tray_inertia: float = 8.0e-3
    tray_linear_damping: float = 3.0
    tray_angular_damping: float = 0.3
    # Reach limit of the mount: translation past this box meets a stiff
    # spring-damper. The box is tight on purpose: the wrist repositions the
    # object by tilting, and translation is a couple of centimeters of
    # compliance, not a transport mechanism. A flat-out push penetrates about
    # a centimeter.
    mount_reach: float = 0.02
    mount_wall_stiffness: float = 500.0
    mount_wall_damping: float = 20.0

    slot_names: tuple[str, ...] = ("object-surface", "object-rim")
    n_bodies: int = 2
    n_controls: int = 3


@dataclass(frozen=True)
class PushTPhysics:
    """Constants of the bimanual push task (bodies: ee1, ee2, block)."""

    workspace_half: float = 0.75
    ee_radius: float = 0.02
    ee_mass: float = 0.1
    ee_damping: float = 1.2
    block_height: float = 0.5
    block_width: float = 0.6
    block_thickness: float = 0.2
    ground_friction: float = 0.5
    ground_reference_load: float = 1.0
    ground_smoothness: float = 50.0
    ground_spin_radius: float = 0.15
    block_linear_damping: float = 0.3
    block_angular_damping: float = 0.02

    slot_names: tuple[str, ...] = (
        "ee1-block",
        "ee2-block",
        "ee1-ee2",
        "ee1-wall-x",
        "ee1-wall-y",
        "ee2-wall-x",
        "ee2-wall-y",
        "block-wall-x",
        "block-wall-y",
    )
    n_bodies: int = 3
    n_controls: int = 4

    def block_polygon(self) -> Polygon:
        return t_block_polygon(self.block_height, self.block_width, self.block_thickness)


Physics = TrayPhysics | PushTPhysics

_POLY_CACHE: dict[tuple[float, float, float], NDArray[np.float64]] = {}
_BOX_CACHE: dict[tuple[float, float, float], NDArray[np.float64]] = {}


def _block_vertices(ph: PushTPhysics) -> NDArray[np.float64]:
    key = (ph.block_height, ph.block_width, ph.block_thickness)
    verts = _POLY_CACHE.get(key)
    if verts is None:
        verts = ph.block_polygon().vertices
        _POLY_CACHE[key] = verts
    return verts


def _block_boxes(ph: PushTPhysics) -> NDArray[np.float64]:
    key = (ph.block_height, ph.block_width, ph.block_thickness)
    boxes = _BOX_CACHE.get(key)
    if boxes is None:
        boxes = t_block_boxes(ph.block_height, ph.block_width, ph.block_thickness)
        _BOX_CACHE[key] = boxes
    return boxes


def _perp(v: NDArray[np.float64]) -> NDArray[np.float64]:
    """90-degree counterclockwise rotation of (..., 2) vectors."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _cross2(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _relax_magnitude(
    s0: NDArray[np.float64], rate: NDArray[np.float64], smooth: float, h: float
) -> NDArray[np.float64]:
    """Implicit decay of a nonnegative slip speed under smooth Coulomb friction.

    Solves s = s0 - h * rate * tanh(smooth * s) for s >= 0 with three Newton
    iterations; g'(s) >= 1 everywhere, so the iteration is monotone and the
    fixed count keeps the map smooth and deterministic.
    """
    s = np.maximum(s0, 0.0)
    hr = h * rate
    for _ in range(3):
        t = np.tanh(smooth * s)
        g = s + hr * t - s0
        gp = 1.0 + hr * smooth * (1.0 - t * t)
        s = s - g / gp
    return np.clip(s, 0.0, None)


def clamp_params(phys: NDArray[np.float64]) -> NDArray[np.float64]:
    """Apply the positivity floors to a (B, 5) physical-parameter array."""
    out = np.array(phys, dtype=np.float64, copy=True)
    out[:, 0] = np.maximum(out[:, 0], MASS_FLOOR)
    out[:, 1] = np.maximum(out[:, 1], INERTIA_FLOOR)
    out[:, 4] = np.maximum(out[:, 4], 0.0)
    return out


def params_to_row(params: PhysParams) -> NDArray[np.float64]:
    return np.array(
        [
            params.mass,
            params.inertia,
            params.com_offset[0],
            params.com_offset[1],
            params.friction,
        ]
    )


class _SlotRecorder:
    """Accumulates per-slot impulses over substeps of one step."""

    def __init__(self, batch: int, n_slots: int):
        self.normals = np.zeros((batch, n_slots))
        self.tangentials = np.zeros((batch, n_slots))
        self.points = np.zeros((batch, n_slots, 2))
        self.gaps = np.zeros((batch, n_slots))

    def record(
        self,
        slot: int,
        imp_n: NDArray[np.float64],
        imp_t: NDArray[np.float64],
        point: NDArray[np.float64],
        gap: NDArray[np.float64],
    ) -> None:
        self.normals[:, slot] += imp_n
        self.tangentials[:, slot] += imp_t
        self.points[:, slot] = point
        self.gaps[:, slot] = gap


def _axis_wall_pair(
    coord: NDArray[np.float64],
    vel_axis: NDArray[np.float64],
    vel_tangent: NDArray[np.float64],
    half: float,
    radius: float,
    mu: NDArray[np.float64] | float,
    cfg: ContactConfig,
    h: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Contacts with both walls of one axis of a box, resolved along that axis.

    Both walls are evaluated so a dead-center body feels an exact force
    balance instead of an arbitrary near-wall choice.

    Args:
        coord: (B,) body-center coordinate along the axis.
        vel_axis: (B,) relative velocity component along the axis.
        vel_tangent: (B,) relative slip along the wall tangent.
        half: Wall position (interior half-extent).
        radius: Body radius along the axis.
        mu: Friction coefficient(s).
        cfg: Contact constants.
        h: Substep, s.

    Returns:
        (axial impulse sum, normal impulse sum, tangential impulse sum,
        nearest gap, nearest-wall sign): axial impulse is signed along the
        axis; tangential impulse acts along the wall tangent.
    """
    imp_axis = np.zeros_like(coord)
    imp_n_total = np.zeros_like(coord)
    imp_t_total = np.zeros_like(coord)
    gaps = []
    for wall in (1.0, -1.0):
        gap = half - wall * coord - radius
        vn = -wall * vel_axis  # separation rate relative to this wall
        imp_n = normal_impulse(gap, vn, cfg, h)
        imp_t = tangential_impulse(imp_n, vel_tangent, mu, cfg)
        imp_axis += -wall * imp_n
        imp_n_total += imp_n
        imp_t_total += imp_t
        gaps.append(gap)
    near_sign = np.where(gaps[0] <= gaps[1], 1.0, -1.0)
    near_gap = np.minimum(gaps[0], gaps[1])
    return imp_axis, imp_n_total, imp_t_total, near_gap, near_sign


def _step_tray_substeps(
    poses: NDArray[np.float64],
    twists: NDArray[np.float64],
    controls: NDArray[np.float64],
    phys: NDArray[np.float64],
    ph: TrayPhysics,
    cfg: ContactConfig,
    integ: IntegratorConfig,
    rec: _SlotRecorder,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    h = integ.dt / integ.substeps
    B = poses.shape[0]
    p_t = poses[:, 0, :2].copy()
    th_t = poses[:, 0, 2].copy()
    v_t = twists[:, 0, :2].copy()
    w_t = twists[:, 0, 2].copy()
    p_o = poses[:, 1, :2].copy()
    th_o = poses[:, 1, 2].copy()
    v_o = twists[:, 1, :2].copy()
    w_o = twists[:, 1, 2].copy()

    m_o = phys[:, 0]
    i_o = phys[:, 1]
    off = phys[:, 2:4]
    mu = phys[:, 4]
    m_t, i_t = ph.tray_mass, ph.tray_inertia
    r = ph.object_radius
    L = ph.tray_half_length

    for _ in range(integ.substeps):
        c_o, s_o = np.cos(th_o), np.sin(th_o)
        off_w = np.stack(
            [c_o * off[:, 0] - s_o * off[:, 1], s_o * off[:, 0] + c_o * off[:, 1]],
            axis=-1,
        )
        com = p_o + off_w
        v_com = v_o + w_o[:, None] * _perp(off_w)

        c_t, s_t = np.cos(th_t), np.sin(th_t)
        t_w = np.stack([c_t, s_t], axis=-1)  # along the tray surface
        n_w = _perp(t_w)  # surface normal, tray-local up
        d = p_o - p_t
        rel_x = np.sum(d * t_w, axis=1)
        rel_y = np.sum(d * n_w, axis=1)

        dv_o = np.zeros_like(v_o)
        dw_o = np.zeros_like(w_o)
        dw_t = np.zeros_like(w_t)

        # Support contact: the object's lowest point against the tray surface.
        gap_s = rel_y - r
        pc_s = p_o - r * n_w
        v_pc_o = v_com + w_o[:, None] * _perp(pc_s - com)
        v_pc_t = v_t + w_t[:, None] * _perp(pc_s - p_t)
        v_rel = v_pc_o - v_pc_t
        vn = np.sum(v_rel * n_w, axis=1)
        v_slip = np.sum(v_rel * t_w, axis=1)
        imp_n = normal_impulse(gap_s, vn, cfg, h)
        imp_t = tangential_impulse(imp_n, v_slip, mu, cfg)
        imp = imp_n[:, None] * n_w + imp_t[:, None] * t_w
        dv_o += imp / m_o[:, None]
        dw_o += _cross2(pc_s - com, imp) / i_o
        dw_t -= _cross2(pc_s - p_t, imp) / i_t
        rec.record(0, imp_n, imp_t, pc_s, gap_s)

        # Rim contacts at both tray ends; both act so the recorder stays
        # smooth when the object crosses the center. Rim friction runs along
        # the surface normal (the object slides up or down the rim face).
        imp_n_slot = np.zeros(B)
        imp_t_slot = np.zeros(B)
        near = np.where(rel_x >= 0.0, 1.0, -1.0)
        pc_near = np.zeros((B, 2))
        gap_near = np.full(B, np.inf)
        for wall in (1.0, -1.0):
            gap = L - wall * rel_x - r
            pc = p_o + wall * r * t_w
            v_pc_o = v_com + w_o[:, None] * _perp(pc - com)
            v_pc_t = v_t + w_t[:, None] * _perp(pc - p_t)
            v_rel = v_pc_o - v_pc_t
            vn = -wall * np.sum(v_rel * t_w, axis=1)
            v_slip = np.sum(v_rel * n_w, axis=1)
            imp_n = normal_impulse(gap, vn, cfg, h)
            imp_t = tangential_impulse(imp_n, v_slip, mu, cfg)
            imp = (-wall * imp_n)[:, None] * t_w + imp_t[:, None] * n_w
            dv_o += imp / m_o[:, None]
            dw_o += _cross2(pc - com, imp) / i_o
            dw_t -= _cross2(pc - p_t, imp) / i_t
            imp_n_slot += imp_n
            imp_t_slot += imp_t
            on_near = near == wall
            pc_near = np.where(on_near[:, None], pc, pc_near)
            gap_near = np.where(on_near, gap, gap_near)
        rec.record(1, imp_n_slot, imp_t_slot, pc_near, gap_near)

        # Tray: the mount absorbs contact forces and the tray's own weight,
        # so linear motion follows the commands exactly; the wrist feels the
        # contact load torques. The mount's reach limit acts as a stiff
        # spring-damper on translation past the reach box, an internal force
        # like the gravity compensation, so it is not a recorded contact.
        reach = np.clip(p_t, -ph.mount_reach, ph.mount_reach) - p_t
        wall = ph.mount_wall_stiffness * reach - ph.mount_wall_damping * np.where(
            reach != 0.0, v_t, 0.0
        )
        v_t = v_t + (h / m_t) * (
            controls[:, :2] + wall - ph.tray_linear_damping * v_t
        )
        w_t = (
            w_t
            + (h / i_t) * (controls[:, 2] - ph.tray_angular_damping * w_t)
            + dw_t
        )

        # Object: gravity plus contact impulses.
        v_com = v_com + dv_o
        v_com[:, 1] -= GRAVITY * h
        w_o = w_o + dw_o

        # Integrate poses; convert the object back to geometric coordinates.
        p_t = p_t + h * v_t
        th_t = th_t + h * w_t
        com = com + h * v_com
        th_o = th_o + h * w_o
        c_o, s_o = np.cos(th_o), np.sin(th_o)
        off_w = np.stack(
            [c_o * off[:, 0] - s_o * off[:, 1], s_o * off[:, 0] + c_o * off[:, 1]],
            axis=-1,
        )
        p_o = com - off_w
        v_o = v_com - w_o[:, None] * _perp(off_w)

    out_poses = np.stack(
        [
            np.concatenate([p_t, th_t[:, None]], axis=1),
            np.concatenate([p_o, th_o[:, None]], axis=1),
        ],
        axis=1,
    )
    out_twists = np.stack(
        [
            np.concatenate([v_t, w_t[:, None]], axis=1),
            np.concatenate([v_o, w_o[:, None]], axis=1),
        ],
        axis=1,
    )
    return out_poses, out_twists


def _disc_pair_contact(
    p_a: NDArray[np.float64],
    v_a: NDArray[np.float64],
    p_b: NDArray[np.float64],
    v_b: NDArray[np.float64],
    radius_sum: float,
    mu: NDArray[np.float64] | float,
    cfg: ContactConfig,
    h: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Contact of two discs; returns (imp vector on a, imp_n, imp_t, point, gap)."""
    d = p_a - p_b
    dist = np.sqrt(np.sum(d * d, axis=1))
    safe = np.maximum(dist, 1e-12)
    n = d / safe[:, None]
    n[dist < 1e-12] = np.array([1.0, 0.0])
    gap = dist - radius_sum
    v_rel = v_a - v_b
    vn = np.sum(v_rel * n, axis=1)
    t = _perp(n)
    vt = np.sum(v_rel * t, axis=1)
    imp_n = normal_impulse(gap, vn, cfg, h)
    imp_t = tangential_impulse(imp_n, vt, mu, cfg)
    imp = imp_n[:, None] * n + imp_t[:, None] * t
    point = p_b + n * (radius_sum / 2.0)
    return imp, imp_n, imp_t, point, gap


def _step_pusht_substeps(
    poses: NDArray[np.float64],
    twists: NDArray[np.float64],
    controls: NDArray[np.float64],
    phys: NDArray[np.float64],
    ph: PushTPhysics,
    cfg: ContactConfig,
    integ: IntegratorConfig,
    rec: _SlotRecorder,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    h = integ.dt / integ.substeps
    B = poses.shape[0]
    verts = _block_vertices(ph)
    boxes = _block_boxes(ph)
    bound_radius = float(np.max(np.sqrt(np.sum(verts * verts, axis=1))))

    p_e = [poses[:, 0, :2].copy(), poses[:, 1, :2].copy()]
    v_e = [twists[:, 0, :2].copy(), twists[:, 1, :2].copy()]
    # Effector headings carry no dynamics (discs, no applied torque); they and
    # their rates pass through unchanged.
    th_e = [poses[:, 0, 2], poses[:, 1, 2]]
    w_e = [twists[:, 0, 2], twists[:, 1, 2]]
    p_b = poses[:, 2, :2].copy()
    th_b = poses[:, 2, 2].copy()
    v_b = twists[:, 2, :2].copy()
    w_b = twists[:, 2, 2].copy()

    m_b = phys[:, 0]
    i_b = phys[:, 1]
    mu = phys[:, 4]
    m_e = ph.ee_mass

    for _ in range(integ.substeps):
        dv_e = [np.zeros_like(v) for v in v_e]
        dv_b = np.zeros_like(v_b)
        dw_b = np.zeros_like(w_b)
        c_b, s_b = np.cos(th_b), np.sin(th_b)

        # Effector-block contacts through the polygon SDF, both effectors in
        # one batched query.
        d2 = np.concatenate([p_e[0] - p_b, p_e[1] - p_b], axis=0)
        c2 = np.concatenate([c_b, c_b])
        s2 = np.concatenate([s_b, s_b])
        local = np.stack(
            [c2 * d2[:, 0] + s2 * d2[:, 1], -s2 * d2[:, 0] + c2 * d2[:, 1]],
            axis=-1,
        )
        sdf2, grad2 = box_union_sdf(boxes, local)
        for slot, e in enumerate((0, 1)):
            rows = slice(e * B, (e + 1) * B)
            gap = sdf2[rows] - ph.ee_radius
            g = grad2[rows]
            n_w = np.stack(
                [c_b * g[:, 0] - s_b * g[:, 1], s_b * g[:, 0] + c_b * g[:, 1]],
                axis=-1,
            )
            pc = p_e[e] - n_w * ph.ee_radius
            v_pc_b = v_b + w_b[:, None] * _perp(pc - p_b)
            v_rel = v_e[e] - v_pc_b
            vn = np.sum(v_rel * n_w, axis=1)
            t_w = _perp(n_w)
            vt = np.sum(v_rel * t_w, axis=1)
            imp_n = normal_impulse(gap, vn, cfg, h)
            imp_t = tangential_impulse(imp_n, vt, mu, cfg)
            imp = imp_n[:, None] * n_w + imp_t[:, None] * t_w
            dv_e[e] += imp / m_e
            dv_b -= imp / m_b[:, None]
            dw_b -= _cross2(pc - p_b, imp) / i_b
            rec.record(slot, imp_n, imp_t, pc, gap)

        # Effector pair contact.
        imp, imp_n, imp_t, point, gap = _disc_pair_contact(
            p_e[0], v_e[0], p_e[1], v_e[1], 2.0 * ph.ee_radius, mu, cfg, h
        )
        dv_e[0] += imp / m_e
        dv_e[1] -= imp / m_e
        rec.record(2, imp_n, imp_t, point, gap)

        # Workspace walls: effectors (exact disc), block (bounding circle).
        wall_bodies = (
            (3, p_e[0], v_e[0], ph.ee_radius, 0),
            (5, p_e[1], v_e[1], ph.ee_radius, 1),
            (7, p_b, v_b, bound_radius, None),
        )
        for slot0, p, v, radius, who in wall_bodies:
            for axis in (0, 1):
                t_axis = 1 - axis
                imp_axis, imp_n, imp_t, gap, near = _axis_wall_pair(
                    p[:, axis],
                    v[:, axis],
                    v[:, t_axis],
                    ph.workspace_half,
                    radius,
                    mu,
                    cfg,
                    h,
                )
                imp = np.zeros_like(p)
                imp[:, axis] = imp_axis
                imp[:, t_axis] = imp_t
                pc = p.copy()
                pc[:, axis] += near * radius
                if who is None:
                    # Bounding-circle contact acts through the block center.
                    dv_b += imp / m_b[:, None]
                else:
                    dv_e[who] += imp / m_e
                rec.record(slot0 + axis, imp_n, imp_t, pc, gap)

        # Effector actuation and damping.
        for e in range(2):
            f = controls[:, 2 * e : 2 * e + 2]
            v_e[e] = v_e[e] + (h / m_e) * (f - ph.ee_damping * v_e[e]) + dv_e[e]

        # Block: contact impulses, viscous damping, then implicit ground drag.
        v_b = v_b + dv_b + (h / m_b)[:, None] * (-ph.block_linear_damping * v_b)
        w_b = w_b + dw_b + (h / i_b) * (-ph.block_angular_damping * w_b)

        speed = np.sqrt(np.sum(v_b * v_b, axis=1))
        rate = ph.ground_friction * ph.ground_reference_load / m_b
        new_speed = _relax_magnitude(speed, rate, ph.ground_smoothness, h)
        scale = np.where(speed > 1e-12, new_speed / np.maximum(speed, 1e-12), 1.0)
        v_b = v_b * scale[:, None]

        spin_rate = (
            ph.ground_friction
            * ph.ground_reference_load
            * ph.ground_spin_radius
            / i_b
        )
        new_spin = _relax_magnitude(np.abs(w_b), spin_rate, ph.ground_smoothness, h)
        w_b = np.sign(w_b) * new_spin

        for e in range(2):
            p_e[e] = p_e[e] + h * v_e[e]
        p_b = p_b + h * v_b
        th_b = th_b + h * w_b

    out_poses = np.stack(
        [
            np.concatenate([p_e[0], th_e[0][:, None]], axis=1),
            np.concatenate([p_e[1], th_e[1][:, None]], axis=1),
            np.concatenate([p_b, th_b[:, None]], axis=1),
        ],
        axis=1,
    )
    out_twists = np.stack(
        [
            np.concatenate([v_e[0], w_e[0][:, None]], axis=1),
            np.concatenate([v_e[1], w_e[1][:, None]], axis=1),
            np.concatenate([v_b, w_b[:, None]], axis=1),
        ],
        axis=1,
    )
    return out_poses, out_twists


def step_batch(
    poses: NDArray[np.float64],
    twists: NDArray[np.float64],
    controls: NDArray[np.float64],
    phys: NDArray[np.float64],
    physics: Physics,
    contact: ContactConfig,
    integrator: IntegratorConfig,
) -> tuple[
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
]:
    """Advance a batch of worlds by one control step (integrator.substeps substeps).

    Args:
        poses: (B, n_bodies, 3) geometric poses.
        twists: (B, n_bodies, 3) twists.
        controls: (B, n_controls) held constant over the step.
        phys: (B, 5) physical parameters in PHYS_COLS order; floored inside.
        physics: Environment constants (TrayPhysics or PushTPhysics).
        contact: Contact model constants.
        integrator: Step and substep sizes.

    Returns:
        (poses, twists, impulse_normals, impulse_tangentials, impulse_points,
        impulse_gaps); impulses are per-slot sums over substeps, points and
        gaps from the last substep. Rows whose state went non-finite, left the
        workspace, or exceeded the twist limit are frozen at their previous
        value with zeroed twists; detect them with blown_rows.
    """
    phys = clamp_params(phys)
    rec = _SlotRecorder(poses.shape[0], len(physics.slot_names))
    if isinstance(physics, TrayPhysics):
        new_poses, new_twists = _step_tray_substeps(
            poses, twists, controls, phys, physics, contact, integrator, rec
        )
    elif isinstance(physics, PushTPhysics):
        new_poses, new_twists = _step_pusht_substeps(
            poses, twists, controls, phys, physics, contact, integrator, rec
        )
    else:
        raise TypeError(f"unsupported physics {type(physics).__name__}")

    with np.errstate(invalid="ignore"):
        ok = np.isfinite(new_poses).all(axis=(1, 2))
        ok &= np.isfinite(new_twists).all(axis=(1, 2))
        bound = WORKSPACE_MARGIN * physics.workspace_half
        ok &= (np.abs(new_poses[:, :, :2]) <= bound).all(axis=(1, 2))
        ok &= (np.abs(new_twists) <= TWIST_LIMIT).all(axis=(1, 2))
    if not ok.all():
        bad = ~ok
        new_poses[bad] = poses[bad]
        new_twists[bad] = 0.0
        rec.normals[bad] = 0.0
        rec.tangentials[bad] = 0.0
        rec.gaps[bad] = 0.0
    return new_poses, new_twists, rec.normals, rec.tangentials, rec.points, rec.gaps


def blown_rows(
    poses: NDArray[np.float64],
    twists: NDArray[np.float64],
    new_poses: NDArray[np.float64],
    new_twists: NDArray[np.float64],
) -> NDArray[np.bool_]:
    """Rows frozen by the blowup guard: pose unchanged and twist zeroed."""
    frozen = (new_poses == poses).all(axis=(1, 2)) & (new_twists == 0.0).all(
        axis=(1, 2)
    )
    was_moving = (twists != 0.0).any(axis=(1, 2))
    return frozen & was_moving


def step(
    state: BodyState,
    control: NDArray[np.float64],
    params: PhysParams,
    env: "EnvSpec",
) -> tuple[BodyState, list]:
    """Advance one world by one step; the plant and surrogate share this path.

    Args:
        state: Current body state.
        control: (n_controls,) control vector, already within bounds.
        params: Physical parameters theta.
        env: Environment specification.

    Returns:
        (next state, list of ContactImpulse per slot).

    Raises:
        IntegrationBlowup: If the step produced a divergent state.
    """
    poses = state.poses[None, :, :]
    twists = state.twists[None, :, :]
    controls = np.asarray(control, dtype=np.float64)[None, :]
    phys = params_to_row(params)[None, :]
    new_poses, new_twists, imp_n, imp_t, imp_p, imp_g = step_batch(
        poses, twists, controls, phys, env.physics, env.contact, env.integrator
    )
    if blown_rows(poses, twists, new_poses, new_twists)[0] or not (
        np.isfinite(new_poses).all() and np.isfinite(new_twists).all()
    ):
        raise IntegrationBlowup("state diverged during step", 0)
    traj_like = Trajectory(
        poses=np.stack([state.poses, new_poses[0]]),
        twists=np.stack([state.twists, new_twists[0]]),
        controls=controls,
        impulse_normals=imp_n,
        impulse_tangentials=imp_t,
        impulse_points=imp_p,
        impulse_gaps=imp_g,
        slot_names=env.physics.slot_names,
    )
    return BodyState(new_poses[0], new_twists[0]), traj_like.impulses_at(0)


def rollout(
    initial: BodyState,
    controls: NDArray[np.float64],
    params: PhysParams,
    env: "EnvSpec",
) -> Trajectory:
    """Roll a control sequence forward under fixed parameters.

    Args:
        initial: State at the first step.
        controls: (T, n_controls) sequence; T may be zero.
        params: Physical parameters theta.
        env: Environment specification.

    Returns:
        Trajectory with T+1 states; purely functional, so repeated calls are
        bit-identical and rollouts compose in parallel.

    Raises:
        IntegrationBlowup: Carrying the index of the offending step.
    """
    controls = np.asarray(controls, dtype=np.float64)
    if controls.ndim == 1 and controls.size == 0:
        controls = controls.reshape(0, env.physics.n_controls)
    horizon = controls.shape[0]
    n_slots = len(env.physics.slot_names)
    nb = initial.n_bodies
    poses = np.empty((horizon + 1, nb, 3))
    twists = np.empty((horizon + 1, nb, 3))
    poses[0] = initial.poses
    twists[0] = initial.twists
    imp_n = np.zeros((horizon, n_slots))
    imp_t = np.zeros((horizon, n_slots))
    imp_p = np.zeros((horizon, n_slots, 2))
    imp_g = np.zeros((horizon, n_slots))

    cur_p = initial.poses[None, :, :]
    cur_v = initial.twists[None, :, :]
    phys = params_to_row(params)[None, :]
    for t in range(horizon):
        new_p, new_v, sn, st, sp, sg = step_batch(
            cur_p, cur_v, controls[t][None, :], phys, env.physics, env.contact, env.integrator
        )
        if blown_rows(cur_p, cur_v, new_p, new_v)[0]:
            raise IntegrationBlowup("state diverged during rollout", t)
        poses[t + 1] = new_p[0]
        twists[t + 1] = new_v[0]
        imp_n[t] = sn[0]
        imp_t[t] = st[0]
        imp_p[t] = sp[0]
        imp_g[t] = sg[0]
        cur_p, cur_v = new_p, new_v

    return Trajectory(
        poses=poses,
        twists=twists,
        controls=controls,
        impulse_normals=imp_n,
        impulse_tangentials=imp_t,
        impulse_points=imp_p,
        impulse_gaps=imp_g,
        slot_names=env.physics.slot_names,
    )
