"""Exception types shared across the package."""


class AdasenseError(Exception):
    """Base class for all package-specific errors."""


class BudgetExceeded(AdasenseError):
    """A hard-budget ledger refused a measurement charge."""


class InvalidAction(AdasenseError):
    """Sensing action outside the index range {1..n}."""


class InvalidEpsilon(AdasenseError):
    """Risk level outside its admissible interval."""


class InvalidSparsity(AdasenseError):
    """Sparsity level incompatible with the ambient dimension."""


class InvalidDimension(AdasenseError):
    """Ambient dimension too small for the requested operation."""


class ClassTooLarge(AdasenseError):
    """Explicit support class beyond the exact solver's limits."""


class OutOfSupport(AdasenseError):
    """Probability mass requested outside a distribution's support."""


class EmptyCurve(AdasenseError):
    """A plot or scan was requested for a curve with no points."""
