"""Exception hierarchy shared by all modules."""


class SwrrstError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(SwrrstError, ValueError):
    """Input data violates a required symmetry or structural invariant."""


class BoundsError(SwrrstError, IndexError):
    """A spin-orbital or qubit index lies outside the allowed range."""


class CapacityError(SwrrstError):
    """A configured size cap (terms, operator length, dense dimension) was hit."""


class DomainError(SwrrstError, ValueError):
    """An operator is outside the domain of the requested operation."""


class StructureError(SwrrstError):
    """An operator does not have the structure an operation relies on."""


class NumericalError(SwrrstError):
    """Base class for numerical failures of iterative procedures."""


class SingularityError(NumericalError):
    """A vanishing energy denominator was met in the amplitude update.

    Attributes:
        term: ``(creators, annihilators)`` of the offending excitation (0-based).
        denominator: the value of the denominator.
    """

    def __init__(self, message, term=None, denominator=None):
        super().__init__(message)
        self.term = term
        self.denominator = denominator


class DivergenceError(NumericalError):
    """An iterative solve did not converge; ``report`` holds its history."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(SwrrstError, ValueError):
    """A run configuration is malformed."""


class ParseError(SwrrstError, ValueError):
    """A text file could not be parsed; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
