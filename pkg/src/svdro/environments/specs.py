"""Environment specifications: parameter priors and the full task description.

An EnvSpec bundles everything a controller or benchmark needs to run a task:
the dynamics constants, the goal, the cost weights, the uncertainty prior over
physical parameters, control bounds, timing, and observation noise. Specs are
frozen and serialize to plain YAML, so a benchmark run can be reproduced from
its config file alone.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any

import numpy as np
import yaml
from numpy.typing import NDArray

from ..dynamics.contact import ContactConfig
from ..dynamics.engine import PHYS_COLS, Physics, PushTPhysics, TrayPhysics
from ..dynamics.types import IntegratorConfig, PhysParams
from ..errors import ConfigurationError, ValidationError
from .costs import CostWeights

_PARAM_INDEX = {name: i for i, name in enumerate(PHYS_COLS)}


@dataclass(frozen=True)
class ParamPrior:
    """Uniform box prior over a subset of the physical parameters.

    Attributes:
        names: Varied parameter names, a subset of PHYS_COLS. Parameters not
            listed stay at their value in `base`.
        lower: Box lower bounds, aligned with names.
        upper: Box upper bounds. A degenerate interval (lower == upper) pins
            the parameter to that point.
        base: Values of every parameter outside the box.
    """

    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    base: PhysParams

    def __post_init__(self) -> None:
        if not self.names:
            raise ConfigurationError("prior must vary at least one parameter")
        if len(set(self.names)) != len(self.names):
            raise ConfigurationError("duplicate parameter name in prior")
        for name in self.names:
            if name not in _PARAM_INDEX:
                raise ConfigurationError(f"unknown physical parameter {name!r}")
        if len(self.lower) != len(self.names) or len(self.upper) != len(self.names):
            raise ConfigurationError("prior bounds must align with names")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ConfigurationError(f"non-finite bound on {name}")
            if lo > hi:
                raise ConfigurationError(f"empty interval for {name}: [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def lower_array(self) -> NDArray[np.float64]:
        return np.asarray(self.lower, dtype=np.float64)

    @property
    def upper_array(self) -> NDArray[np.float64]:
        return np.asarray(self.upper, dtype=np.float64)

    @property
    def scales(self) -> NDArray[np.float64]:
        """Per-dimension box widths, floored away from zero.

        Kernel distances and transport steps work in coordinates divided by
        these, so parameters with different units mix in one particle set.
        """
        return np.maximum(self.upper_array - self.lower_array, 1.0e-12)

    def sample_rows(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        """Draw n points uniformly from the box, shape (n, dim)."""
        return rng.uniform(self.lower_array, self.upper_array, size=(n, self.dim))

    def mean_row(self) -> NDArray[np.float64]:
        """Center of the box, which is also the prior mean."""
        return 0.5 * (self.lower_array + self.upper_array)

    def clamp_rows(self, rows: NDArray[np.float64]) -> NDArray[np.float64]:
        """Project points back into the box, elementwise."""
        return np.clip(rows, self.lower_array, self.upper_array)

    def contains(self, rows: NDArray[np.float64]) -> NDArray[np.bool_]:
        rows = np.atleast_2d(rows)
        return np.all((rows >= self.lower_array) & (rows <= self.upper_array), axis=-1)

    def to_params(self, row: NDArray[np.float64]) -> PhysParams:
        """Materialize one box point as a full PhysParams."""
        full = self.full_row(row)
        return PhysParams(
            mass=float(full[0]),
            inertia=float(full[1]),
            com_offset=(float(full[2]), float(full[3])),
            friction=float(full[4]),
        )

    def full_row(self, row: NDArray[np.float64]) -> NDArray[np.float64]:
        """One box point widened to the 5-column physical-parameter layout."""
        return self.full_matrix(np.asarray(row, dtype=np.float64)[None, :])[0]

    def full_matrix(self, rows: NDArray[np.float64]) -> NDArray[np.float64]:
        """(n, dim) box points widened to (n, 5) rows in PHYS_COLS order."""
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise ConfigurationError(f"expected (n, {self.dim}) rows")
        base = np.array(
            [
                self.base.mass,
                self.base.inertia,
                self.base.com_offset[0],
                self.base.com_offset[1],
                self.base.friction,
            ]
        )
        full = np.tile(base, (rows.shape[0], 1))
        for j, name in enumerate(self.names):
            full[:, _PARAM_INDEX[name]] = rows[:, j]
        return full


def sample_prior(prior: ParamPrior, rng: np.random.Generator) -> PhysParams:
    """Draw one full parameter set from the prior."""
    return prior.to_params(prior.sample_rows(rng, 1)[0])


@dataclass(frozen=True)
class EnvSpec:
    """Complete description of one benchmark task.

    Attributes:
        name: Task identifier ("tray" or "pusht").
        physics: Dynamics constants.
        goal: Goal pose (x, y, heading); relative to the tray for the tray
            task, a world pose for the push task.
        weights: Cost weights.
        prior: Uncertainty box over physical parameters.
        control_lower: Per-control lower bounds.
        control_upper: Per-control upper bounds.
        spatial_bound: Half-width of the admissible position region, m.
        horizon_s: Planning horizon in seconds.
        total_time_s: Episode length in seconds.
        execution_window: Plant steps executed per replanning cycle.
        obs_noise_std: Standard deviation of pose observation noise. Twists
            are observed exactly.
        contact: Contact model constants.
        integrator: Integration step sizes.
    """

    name: str
    physics: Physics
    goal: tuple[float, float, float]
    weights: CostWeights
    prior: ParamPrior
    control_lower: tuple[float, ...]
    control_upper: tuple[float, ...]
    spatial_bound: float
    horizon_s: float
    total_time_s: float
    execution_window: int
    obs_noise_std: float
    contact: ContactConfig = ContactConfig()
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self) -> None:
        nu = self.physics.n_controls
        if len(self.control_lower) != nu or len(self.control_upper) != nu:
            raise ConfigurationError(f"control bounds must have {nu} entries")
        if any(l >= u for l, u in zip(self.control_lower, self.control_upper)):
            raise ConfigurationError("control bounds must satisfy lower < upper")
        if self.spatial_bound <= 0.0:
            raise ConfigurationError("spatial bound must be positive")
        if abs(self.goal[0]) > self.spatial_bound or abs(self.goal[1]) > self.spatial_bound:
            raise ConfigurationError("goal lies outside the spatial bounds")
        if self.obs_noise_std < 0.0:
            raise ConfigurationError("observation noise must be nonnegative")
        steps = self.horizon_s / self.integrator.dt
        if self.horizon_s <= 0.0 or abs(steps - round(steps)) > 1.0e-9:
            raise ConfigurationError("horizon must be a whole number of steps")
        total = self.total_time_s / self.integrator.dt
        if self.total_time_s <= 0.0 or abs(total - round(total)) > 1.0e-9:
            raise ConfigurationError("total time must be a whole number of steps")
        if not 1 <= self.execution_window <= int(round(steps)):
            raise ConfigurationError(
                "execution window must be in [1, horizon_steps]"
            )
        self.weights.validate_for(self.physics)

    @property
    def horizon_steps(self) -> int:
        return int(round(self.horizon_s / self.integrator.dt))

    @property
    def total_steps(self) -> int:
        return int(round(self.total_time_s / self.integrator.dt))

    @property
    def n_controls(self) -> int:
        return self.physics.n_controls

    @property
    def goal_array(self) -> NDArray[np.float64]:
        return np.asarray(self.goal, dtype=np.float64)

    @property
    def control_lower_array(self) -> NDArray[np.float64]:
        return np.asarray(self.control_lower, dtype=np.float64)

    @property
    def control_upper_array(self) -> NDArray[np.float64]:
        return np.asarray(self.control_upper, dtype=np.float64)

    def to_dict(self) -> dict[str, Any]:
        """Plain-data form of the spec, the inverse of from_dict."""
        return {
            "schema": "envspec/v1",
            "name": self.name,
            "physics": {
                "kind": "tray" if isinstance(self.physics, TrayPhysics) else "pusht",
                **{
                    f.name: _plain(getattr(self.physics, f.name))
                    for f in dataclasses.fields(self.physics)
                },
            },
            "goal": list(self.goal),
            "weights": {
                "q": list(self.weights.q),
                "qf": list(self.weights.qf),
                "r": list(self.weights.r),
                "n_contact": list(self.weights.n_contact),
                "attract_slots": list(self.weights.attract_slots),
            },
            "prior": {
                "names": list(self.prior.names),
                "lower": list(self.prior.lower),
                "upper": list(self.prior.upper),
                "base": {
                    "mass": self.prior.base.mass,
                    "inertia": self.prior.base.inertia,
                    "com_offset": list(self.prior.base.com_offset),
                    "friction": self.prior.base.friction,
                },
            },
            "control_lower": list(self.control_lower),
            "control_upper": list(self.control_upper),
            "spatial_bound": self.spatial_bound,
            "horizon_s": self.horizon_s,
            "total_time_s": self.total_time_s,
            "execution_window": self.execution_window,
            "obs_noise_std": self.obs_noise_std,
            "contact": {
                f.name: getattr(self.contact, f.name)
                for f in dataclasses.fields(self.contact)
            },
            "integrator": {
                "dt": self.integrator.dt,
                "substeps": self.integrator.substeps,
            },
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "EnvSpec":
        """Build a spec from plain data, rejecting unknown or missing keys.

        Raises:
            ValidationError: On schema mismatch, unknown keys, wrong types,
                or any field combination the constructors reject.
        """
        if not isinstance(data, dict):
            raise ValidationError("spec must be a mapping")
        top = _take(dict(data), "spec", _TOP_KEYS, _TOP_KEYS - {"contact", "integrator"})
        if top["schema"] != "envspec/v1":
            raise ValidationError(f"unsupported schema {top['schema']!r}")

        phys_data = _require_map(top["physics"], "physics")
        kind = phys_data.pop("kind", None)
        phys_cls: type[TrayPhysics] | type[PushTPhysics]
        if kind == "tray":
            phys_cls = TrayPhysics
        elif kind == "pusht":
            phys_cls = PushTPhysics
        else:
            raise ValidationError(f"unknown physics kind {kind!r}")
        phys_keys = {f.name for f in dataclasses.fields(phys_cls)}
        phys_data = _take(phys_data, "physics", phys_keys, set())
        if "slot_names" in phys_data:
            phys_data["slot_names"] = tuple(phys_data["slot_names"])

        weights_data = _take(
            _require_map(top["weights"], "weights"),
            "weights",
            {"q", "qf", "r", "n_contact", "attract_slots"},
            {"q", "qf", "r", "n_contact"},
        )
        weights_data.setdefault("attract_slots", [])
        prior_data = _take(
            _require_map(top["prior"], "prior"),
            "prior",
            {"names", "lower", "upper", "base"},
        )
        base_data = _take(
            _require_map(prior_data["base"], "prior.base"),
            "prior.base",
            {"mass", "inertia", "com_offset", "friction"},
        )
        contact_keys = {f.name for f in dataclasses.fields(ContactConfig)}
        contact_data = _take(
            _require_map(top.get("contact", {}), "contact"), "contact", contact_keys, set()
        )
        integ_data = _take(
            _require_map(top.get("integrator", {}), "integrator"),
            "integrator",
            {"dt", "substeps"},
            set(),
        )

        try:
            return EnvSpec(
                name=str(top["name"]),
                physics=phys_cls(**phys_data),
                goal=_triple(top["goal"], "goal"),
                weights=CostWeights(
                    q=tuple(float(v) for v in weights_data["q"]),
                    qf=tuple(float(v) for v in weights_data["qf"]),
                    r=tuple(float(v) for v in weights_data["r"]),
                    n_contact=tuple(float(v) for v in weights_data["n_contact"]),
                    attract_slots=tuple(int(v) for v in weights_data["attract_slots"]),
                ),
                prior=ParamPrior(
                    names=tuple(str(v) for v in prior_data["names"]),
                    lower=tuple(float(v) for v in prior_data["lower"]),
                    upper=tuple(float(v) for v in prior_data["upper"]),
                    base=PhysParams(
                        mass=float(base_data["mass"]),
                        inertia=float(base_data["inertia"]),
                        com_offset=(
                            float(base_data["com_offset"][0]),
                            float(base_data["com_offset"][1]),
                        ),
                        friction=float(base_data["friction"]),
                    ),
                ),
                control_lower=tuple(float(v) for v in top["control_lower"]),
                control_upper=tuple(float(v) for v in top["control_upper"]),
                spatial_bound=float(top["spatial_bound"]),
                horizon_s=float(top["horizon_s"]),
                total_time_s=float(top["total_time_s"]),
                execution_window=int(top["execution_window"]),
                obs_noise_std=float(top["obs_noise_std"]),
                contact=ContactConfig(**contact_data),
                integrator=IntegratorConfig(**integ_data),
            )
        except ConfigurationError as err:
            raise ValidationError(str(err)) from err
        except (TypeError, ValueError, KeyError, IndexError) as err:
            raise ValidationError(f"malformed spec: {err}") from err

    @staticmethod
    def from_yaml(text: str) -> "EnvSpec":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as err:
            raise ValidationError(f"invalid YAML: {err}") from err
        return EnvSpec.from_dict(data)


_TOP_KEYS = {
    "schema",
    "name",
    "physics",
    "goal",
    "weights",
    "prior",
    "control_lower",
    "control_upper",
    "spatial_bound",
    "horizon_s",
    "total_time_s",
    "execution_window",
    "obs_noise_std",
    "contact",
    "integrator",
}


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return list(value)
    return value


def _triple(value: Any, where: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ValidationError(f"{where} must have three entries")
    return (float(value[0]), float(value[1]), float(value[2]))


def _require_map(value: Any, where: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ValidationError(f"{where} must be a mapping")
    return dict(value)


def _take(
    data: dict[str, Any],
    where: str,
    allowed: set[str],
    required: set[str] | None = None,
) -> dict[str, Any]:
    """Check keys against the schema, naming the first offender.

    Unknown keys are always errors (a typo must not silently fall back to a
    default). Keys in `required` (default: all of `allowed`) must be present;
    the rest may be omitted and take their constructor defaults.
    """
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"unknown key {sorted(unknown)[0]!r} in {where}")
    missing = (allowed if required is None else required) - set(data)
    if missing:
        raise ValidationError(f"missing key {sorted(missing)[0]!r} in {where}")
    return data
