"""Immutable particle sets over the physical-parameter prior box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..dynamics.types import PhysParams
from ..environments.specs import ParamPrior
from ..errors import ConfigurationError


@dataclass(frozen=True)
class ParticleSet:
    """N parameter hypotheses inside a prior box.

    Snapshots are immutable: each transport step returns a new set, so worker
    processes and trace writers can hold references without copies.

    Attributes:
        rows: (N, dim) particle coordinates in physical units, every row
            inside the prior box.
        prior: The box and the normalization scales.
    """

    rows: NDArray[np.float64]
    prior: ParamPrior

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64).copy()
        if rows.ndim != 2 or rows.shape[1] != self.prior.dim:
            raise ConfigurationError(f"particles must be (N, {self.prior.dim})")
        if rows.shape[0] < 1:
            raise ConfigurationError("at least one particle is required")
        if not np.all(np.isfinite(rows)):
            raise ConfigurationError("non-finite particle coordinates")
        if not self.prior.contains(rows).all():
            raise ConfigurationError("particle outside the prior box")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @staticmethod
    def from_prior(prior: ParamPrior, rng: np.random.Generator, n: int) -> "ParticleSet":
        """Draw n particles i.i.d. from the prior."""
        return ParticleSet(rows=prior.sample_rows(rng, n), prior=prior)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def mean_row(self) -> NDArray[np.float64]:
        """Arithmetic particle mean, the reference parameter of the objective."""
        return self.rows.mean(axis=0)

    def mean_params(self) -> PhysParams:
        return self.prior.to_params(self.mean_row())

    def normalized(self) -> NDArray[np.float64]:
        """Rows divided by the prior scales; the transport coordinates."""
        return self.rows / self.prior.scales

    def with_normalized(self, z: NDArray[np.float64]) -> "ParticleSet":
        """New set from normalized coordinates, clamped back into the box."""
        rows = self.prior.clamp_rows(np.asarray(z, dtype=np.float64) * self.prior.scales)
        return ParticleSet(rows=rows, prior=self.prior)

    def phys_matrix(self) -> NDArray[np.float64]:
        """(N, 5) full physical-parameter rows for the dynamics engine."""
        return self.prior.full_matrix(self.rows)
