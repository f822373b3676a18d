"""Exception hierarchy shared across the solver modules."""

from __future__ import annotations


class StefanLabError(Exception):
    """Base class for all failures raised by this package."""


class NonStabilized(StefanLabError):
    """Asymptotic probe estimates did not settle within the 1% rule."""


class NoPositivePeriodicSolution(StefanLabError):
    """Periodic logistic problem has no positive solution (mean growth <= 0)."""


class DegenerateV(StefanLabError):
    """A periodic field expected to be positive has a nonpositive minimum."""


class NonConvergence(StefanLabError):
    """An iterative solve exceeded its iteration budget."""


class Degenerate(StefanLabError):
    """A period-map iterate collapsed to (numerical) zero."""


class StabilityFailure(StefanLabError):
    """Time-stepping produced out-of-bounds or too-negative values."""


class DomainExhausted(StefanLabError):
    """The free boundary approached the truncation radius of the v grid."""


class BoundViolation(StefanLabError):
    """A trajectory record breached the a priori bounds."""


class OrderingViolation(StefanLabError):
    """Two runs violated the expected comparison-principle ordering."""


class NoSemiWave(StefanLabError):
    """The semi-wave existence condition fails (nonpositive mean growth)."""


class NoBracket(StefanLabError):
    """Threshold bisection endpoints did not produce opposite verdicts."""


class InsufficientData(StefanLabError):
    """A trajectory is too short for the requested measurement."""


class NoSignChange(StefanLabError):
    """A diffusion scan found no sign change of the principal eigenvalue."""
