"""
Exception hierarchy for the TISSf toolkit.

Typed outcomes that are part of normal operation (an incompatible nominal
state, a degenerate sample, an infeasible LP status) are plain values and
live next to the code that produces them. Everything here is raised.
"""

from typing import Any, Optional


class TissfError(Exception):
    """Base class for all toolkit errors."""


class NonFiniteError(TissfError):
    """A NaN or infinite value reached a numerical routine."""


class InvalidSetError(TissfError):
    """An input set failed its construction checks (empty, unbounded, malformed)."""


class LpUnboundedError(TissfError):
    """A support LP was unbounded along a direction the construction probe missed."""


class MaxIterationsError(TissfError):
    """An iterative routine hit its iteration cap before converging."""


class NumericalBreakdownError(TissfError):
    """A simplex pivot element fell below the pivot tolerance."""


class DegenerateConstraintError(TissfError):
    """A 2-variable constraint has zero coefficients and a positive right-hand side."""


class DimensionTooLargeError(TissfError):
    """The grid oracle was asked for more input dimensions than it supports."""


class GradientMismatchError(TissfError):
    """An analytic barrier gradient disagrees with finite differences."""


class EmptySampleSetError(TissfError):
    """No sample of the domain lies inside the safe set."""


class AllDegenerateError(TissfError):
    """Every sample hit the degeneracy floors, so nothing can be estimated."""


class InfeasibleTuningError(TissfError):
    """No (ln eps0, lambda) pair satisfies the robust sampled constraints."""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class UnboundedTuningError(TissfError):
    """The tuning LP objective decreases without bound (rho too small for the samples)."""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class ScenarioFailure(TissfError):
    """The safety-filter QP returned an infeasibility certificate during a run."""

    def __init__(self, message: str, t: float, x: Any, certificate: Any = None,
                 log: Optional[Any] = None):
        super().__init__(message)
        self.t = t
        self.x = x
        self.certificate = certificate
        self.log = log


class NonFiniteStateError(TissfError):
    """Integration produced a non-finite state; the partial log is attached."""

    def __init__(self, message: str, t: float, log: Optional[Any] = None):
        super().__init__(message)
        self.t = t
        self.log = log


class ConfigError(TissfError):
    """A configuration file or object is invalid."""
