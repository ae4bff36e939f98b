"""Exception hierarchy shared by the solver layers."""


class BurgersSeriesError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(BurgersSeriesError, ValueError):
    """Invalid grid, kernel, or solver configuration."""


class EvaluationError(BurgersSeriesError, ValueError):
    """A sampled function produced non-finite values."""


class ShapeError(BurgersSeriesError, ValueError):
    """Fields live on incompatible grids."""


class DimensionError(BurgersSeriesError, ValueError):
    """Operation is not defined for the field's dimension."""


class DomainError(BurgersSeriesError, ValueError):
    """Argument outside the domain of a kernel or transform."""


class RangeError(BurgersSeriesError, ValueError):
    """Requested sample lies outside the computed span."""


class NumericalError(BurgersSeriesError, ArithmeticError):
    """Base class for failures of the numerical schemes."""


class StepTooSmallError(NumericalError):
    """Time interval too short for the parametrix quadrature."""


class InstabilityError(NumericalError):
    """Explicit stage blew up."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class OverflowGuardError(NumericalError):
    """Hopf-Cole variable under- or overflowed."""


class StepFailure(NumericalError):
    """Picard iteration of one time step did not converge.

    The trace of the last attempt is kept on ``trace`` and whatever steps
    completed before the failure on ``partial``.
    """

    def __init__(self, message, trace=None, partial=None):
        super().__init__(message)
        self.trace = trace
        self.partial = partial
