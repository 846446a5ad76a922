"""Exception types shared across the package."""


class SupercellError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(SupercellError, ValueError):
    """An input violates an operation precondition or a type invariant."""


class DomainError(InvalidArgument):
    """A value falls outside the tabulated domain of a model (no extrapolation)."""


class DegenerateSpreadError(InvalidArgument):
    """A zero azimuth spread was passed where only the limit formulas apply."""


class GridParseError(InvalidArgument):
    """Malformed ESRI ASCII grid input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(SupercellError, ArithmeticError):
    """Quadrature failed to converge or a regression is rank deficient."""
