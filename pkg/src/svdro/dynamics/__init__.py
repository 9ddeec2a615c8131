"""Smooth-contact planar rigid-body dynamics."""

from .contact import (
    ContactConfig,
    contact_impulse_derivatives,
    contact_window,
    normal_impulse,
    tangential_impulse,
)
from .engine import (
    PHYS_COLS,
    Physics,
    PushTPhysics,
    TrayPhysics,
    blown_rows,
    clamp_params,
    params_to_row,
    rollout,
    step,
    step_batch,
)
from .geometry import Polygon, box_union_sdf, polygon_sdf, t_block_boxes, t_block_polygon
from .types import BodyState, ContactImpulse, IntegratorConfig, PhysParams, Trajectory

__all__ = [
    "BodyState",
    "ContactConfig",
    "ContactImpulse",
    "IntegratorConfig",
    "PHYS_COLS",
    "PhysParams",
    "Physics",
    "Polygon",
    "PushTPhysics",
    "Trajectory",
    "TrayPhysics",
    "blown_rows",
    "box_union_sdf",
    "clamp_params",
    "contact_impulse_derivatives",
    "contact_window",
    "normal_impulse",
    "params_to_row",
    "polygon_sdf",
    "rollout",
    "step",
    "step_batch",
    "t_block_boxes",
    "t_block_polygon",
    "tangential_impulse",
]
