"""Exception taxonomy shared by all hal modules.

Every error raised by the library derives from :class:`HalError` so callers
(and the CLI exit-code mapping) can distinguish library failures from bugs.
"""

from __future__ import annotations


class HalError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(HalError):
    """An argument or configuration value violates a documented precondition."""


class ShapeError(ValidationError):
    """States passed to an operation have incompatible bases or mode counts."""


class TruncationError(HalError):
    """Probability mass beyond the Fock cutoff exceeds the allowed threshold.

    Attributes
    ----------
    tail_mass : float
        The offending probability mass (truncated tail or sector leakage).
    threshold : float
        The limit that was exceeded.
    """

    def __init__(self, message: str, tail_mass: float, threshold: float):
        super().__init__(message)
        self.tail_mass = float(tail_mass)
        self.threshold = float(threshold)


class ImpossibleOutcomeError(HalError):
    """A conditioning outcome has probability below the representable floor.

    Distinguishes true zero-probability outcomes from underflow; the floor is
    1e-300 everywhere in the package.

    Attributes
    ----------
    probability : float
        The computed outcome probability.
    """

    def __init__(self, message: str, probability: float):
        super().__init__(message)
        self.probability = float(probability)


class NoSuccessError(HalError):
    """An estimator was given an empty set of heralded samples."""


class GridError(ValidationError):
    """A tabulation grid is too coarse (or otherwise unusable) for the
    requested tolerance."""
