"""Exception types shared across the package."""

from __future__ import annotations


class DegenerateInputError(ValueError):
    """A quantity that must be nonzero (a denominator, <q,q>, ...) vanished."""


class PoleError(DegenerateInputError):
    """The spectral parameter hit the spectrum of A."""


class BranchCollisionError(DegenerateInputError):
    """The two roots of a branch-selecting quadratic coincide."""


class FitError(ArithmeticError):
    """Sampled data does not match the rational form it was declared to have."""


class QuadratureError(ArithmeticError):
    """Non-finite integrand value or failure to converge."""

    def __init__(self, message: str, node: complex | None = None):
        super().__init__(message)
        self.node = node


class StepFailure(RuntimeError):
    """An orbit or lattice step could not be taken.

    ``index`` is the step number (int) or the (m, n) grid coordinates.
    """

    def __init__(self, message: str, index):
        super().__init__(f"{message} (at {index})")
        self.index = index


class GrowthError(OverflowError):
    """The phase point grew beyond the configured guard."""


class SingularityError(ArithmeticError):
    """A flow trajectory reached a singular configuration."""


class RootTrackingError(ArithmeticError):
    """Roots could not be matched unambiguously between nearby states."""


class DegenerateCurveError(DegenerateInputError):
    """The spectral curve has repeated branch points."""
