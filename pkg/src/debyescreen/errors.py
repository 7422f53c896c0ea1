"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DebyeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(DebyeError, ValueError):
    """A parameter lies outside its admissible range."""


class DomainError(DebyeError, ValueError):
    """A function was evaluated outside its domain."""


class PenroseViolationError(DebyeError):
    """The velocity profile is not strictly decreasing."""


class NumericalError(DebyeError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Parameters
    ----------
    message : str
        Human readable description.
    achieved : float, optional
        Error estimate or residual actually reached.
    """

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class NonConvergenceError(NumericalError):
    """Fixed-point iteration exhausted its budget."""

    def __init__(self, message: str, residual_history=None, achieved=None, stage=None):
        super().__init__(message, achieved)
        self.residual_history = list(residual_history or [])
        self.stage = stage


class GridTooSmallError(NumericalError):
    """The radial grid truncates a field that has not decayed yet."""


class ConfigError(DebyeError):
    """Invalid run configuration."""
