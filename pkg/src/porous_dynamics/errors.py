"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class PorousDynamicsError(Exception):
    """Base class for library errors."""


class DomainError(PorousDynamicsError, ValueError):
    """Arguments lie outside the domain where a formula is defined."""


class NoConvergence(PorousDynamicsError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message: str, where: float | None = None):
        super().__init__(message)
        self.where = where


class PoleInInterval(DomainError):
    """C1*rho + C2 vanishes inside the working density interval."""


class NonMonotone(PorousDynamicsError, ValueError):
    """G' changes sign, so G cannot be inverted on the interval."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message)
        self.location = location


class OutOfRange(DomainError):
    """Inversion target outside the range of G over its interval."""


class SingularDenominator(PorousDynamicsError, ZeroDivisionError):
    """The attractor coefficient a(y) has a vanishing denominator."""


class StabilityViolation(PorousDynamicsError, ValueError):
    """Explicit time step exceeds the parabolic stability bound."""


class NonParabolic(PorousDynamicsError, ValueError):
    """A(rho) <= 0 encountered, the equation is not forward parabolic."""


class TrivialDynamics(PorousDynamicsError):
    """The b1 = -alpha branch carries no solution formula."""
