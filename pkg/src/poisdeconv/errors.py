"""Exception types shared across the package."""


class DeconvError(Exception):
    """Base class for all package errors."""


class ShapeError(DeconvError, ValueError):
    """Array dimensions are incompatible or invalid."""


class DomainError(DeconvError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ConfigError(DeconvError, ValueError):
    """A configuration value or combination of values is invalid."""


class ParseError(DeconvError, ValueError):
    """A file could not be parsed.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SingularityError(DeconvError, ArithmeticError):
    """A Fourier-domain division would hit a zero denominator."""


class NumericalError(DeconvError, ArithmeticError):
    """A non-finite value appeared during an iterative computation."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class BudgetError(DeconvError, RuntimeError):
    """An evaluation budget is too small for the requested search."""
