"""Exception taxonomy shared across the lab modules."""

from __future__ import annotations


class SpecificationError(ValueError):
    """An input violates a documented precondition (bad shapes, ranges, kinds)."""


class DegenerateInputError(SpecificationError):
    """A quantity is undefined for this input (zero vector, zero variance, ...)."""


class NotSeparableError(RuntimeError):
    """The dataset admits no separating direction with positive margin."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite objective, parameter, or weight state.

    Attributes:
        epoch: index of the epoch at which the state stopped being finite,
            or None when the failure was observed outside a training loop.
    """

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class EstimationFailureError(RuntimeError):
    """Too many inner training runs were discarded to report an estimate."""


class SupportMismatchError(SpecificationError):
    """A density ratio needs mass where the reference density has none."""


class HomogeneityError(AssertionError):
    """A predictor failed its numeric positive-homogeneity verification."""


class ReportInputError(SpecificationError):
    """Report inputs are unusable (e.g. artifacts with mixed schema versions)."""
