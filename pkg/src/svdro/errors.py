"""Exception taxonomy shared across the package.

ConfigurationError and ValidationError map to CLI exit code 1,
everything else that escapes maps to exit code 2.
"""

from __future__ import annotations


class SvdroError(Exception):
    """Base class for package errors."""


class ConfigurationError(SvdroError):
    """Invalid geometry, weights, bounds, or config-file contents."""


class ValidationError(ConfigurationError):
    """Invalid CLI arguments, overrides, or schema violations in files."""


class IntegrationBlowup(SvdroError):
    """Integration produced a non-finite state.

    Attributes:
        step_index: Index of the step that produced the non-finite state,
            or -1 when unknown.
    """

    def __init__(self, message: str, step_index: int = -1):
        super().__init__(message)
        self.step_index = step_index


class PlanningFailure(SvdroError):
    """Every candidate rollout in a plan call was non-finite."""
