"""Stein variational transport of parameter particles.

One step moves every particle along the empirical steepest-descent direction
on the KL divergence to the posterior:

    phi(z_j) = (1/N) sum_i [ k(z_i, z_j) s(z_i) + grad_{z_i} k(z_i, z_j) ]

evaluated in prior-normalized coordinates. The first term attracts particles
along the posterior score at the sources; the second repels them apart. With
one particle the repulsion vanishes and the step is exactly gradient ascent
on the log posterior; with the constant kernel the direction collapses to the
mean score.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigurationError
from ..util import WorkPool
from .kernels import Kernel, kernel_tables
from .particles import ParticleSet

SVGD_STEP_SIZE = 1.0e-4


def stein_direction(
    particles: ParticleSet,
    model,
    kernel: Kernel,
    pool: WorkPool | None = None,
) -> NDArray[np.float64]:
    """Per-particle update directions in normalized coordinates.

    Args:
        particles: Current particle snapshot.
        model: Score provider with ``score_rows(rows, pool) -> (N, dim)``
            normalized scores (the frozen-plan posterior in the controller;
            synthetic targets in tests).
        kernel: Interaction kernel.
        pool: Optional pool for the score's replay probes.

    Returns:
        (N, dim) finite direction array.
    """
    z = particles.normalized()
    scores = np.asarray(model.score_rows(particles.rows, pool), dtype=np.float64)
    if scores.shape != z.shape:
        raise ConfigurationError(f"score shape {scores.shape} != particles {z.shape}")
    values, grads, _ = kernel_tables(kernel, z)
    # direction[j] = mean_i values[i, j] * scores[i] + mean_i grads[i, j].
    attract = values.T @ scores
    repel = grads.sum(axis=0)
    return (attract + repel) / particles.n


def svgd_step(
    particles: ParticleSet,
    model,
    kernel: Kernel,
    step_size: float = SVGD_STEP_SIZE,
    pool: WorkPool | None = None,
) -> ParticleSet:
    """One deterministic transport step, clamped back into the prior box.

    Args:
        particles: Current snapshot (unchanged).
        model: Score provider, see stein_direction.
        kernel: Interaction kernel.
        step_size: Transport rate in normalized coordinates; zero is a no-op.
        pool: Optional pool for score probes.

    Returns:
        New ParticleSet.
    """
    if step_size < 0.0:
        raise ConfigurationError("step size must be nonnegative")
    direction = stein_direction(particles, model, kernel, pool)
    return particles.with_normalized(particles.normalized() + step_size * direction)
