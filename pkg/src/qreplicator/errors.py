"""Exception types shared across the package."""

from __future__ import annotations


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class InvalidStateError(ValueError):
    """A probability vector or density operator violates its invariants."""


class BoundaryError(ValueError):
    """A quantity is undefined because the state sits on the simplex boundary."""


class IntegrationError(RuntimeError):
    """A trajectory produced non-finite values.

    Attributes:
        time: Simulation time at which the offending state was produced.
    """

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time:.17g}")
        self.time = time


class InfeasibleTargetError(ValueError):
    """Target energy lies outside the open interval (min E, max E)."""

    def __init__(self, message: str, bound: str):
        super().__init__(message)
        self.bound = bound


class DegenerateSpectrumError(ValueError):
    """Constant spectrum: the mean energy does not depend on beta."""
