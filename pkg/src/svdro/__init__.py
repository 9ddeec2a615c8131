"""Stein-transported parameter beliefs inside a distributionally robust
sampling-based MPC, with the benchmark harness that evaluates it."""

from .errors import (
    ConfigurationError,
    IntegrationBlowup,
    PlanningFailure,
    SvdroError,
    ValidationError,
)
from .util import WorkPool, substream

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "IntegrationBlowup",
    "PlanningFailure",
    "SvdroError",
    "ValidationError",
    "WorkPool",
    "substream",
    "__version__",
]
