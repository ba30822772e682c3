"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to, so scripted sweeps can tell
bad input apart from numerical trouble.
"""

from __future__ import annotations


class FlowRepError(Exception):
    exit_code = 1


class ValidationError(FlowRepError, ValueError):
    """Malformed input: bad ratings, wrong shapes, out-of-range parameters."""

    exit_code = 2


class NonConvergenceError(FlowRepError):
    """An iteration hit its cap. ``last`` holds the final iterate."""

    exit_code = 3

    def __init__(self, message, last=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class SpectralFailureError(NonConvergenceError):
    """Power iteration for the Perron pair did not settle; ``last`` is the best estimate."""


class TheoremViolationError(FlowRepError):
    """The instance breaks an existence/uniqueness precondition (negative entries,
    unbracketed root, starting vector orthogonal to the Perron vector)."""

    exit_code = 4


class DegenerateInstanceError(TheoremViolationError):
    """A normalizing sum vanished (zero reputation norm, empty complement)."""


class NumericalFailureError(FlowRepError):
    """Singular system where theory says there should not be one."""

    exit_code = 1
