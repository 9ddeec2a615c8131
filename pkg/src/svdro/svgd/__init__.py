"""Stein variational inference over physical parameters."""

from .kernels import (
    DEFAULT_BANDWIDTH,
    KERNEL_KINDS,
    Kernel,
    kernel_eval,
    kernel_grad,
    kernel_tables,
    median_bandwidth,
)
from .ksd import ksd_estimate
from .particles import ParticleSet
from .posterior import FD_STEP_REL, PosteriorModel, optimality_gap
from .transport import SVGD_STEP_SIZE, stein_direction, svgd_step

__all__ = [
    "DEFAULT_BANDWIDTH",
    "FD_STEP_REL",
    "KERNEL_KINDS",
    "Kernel",
    "ParticleSet",
    "PosteriorModel",
    "SVGD_STEP_SIZE",
    "kernel_eval",
    "kernel_grad",
    "kernel_tables",
    "ksd_estimate",
    "median_bandwidth",
    "optimality_gap",
    "stein_direction",
    "svgd_step",
]
