"""Exception hierarchy shared by every module."""


class QAEError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(QAEError, ValueError):
    """An input violates a documented precondition."""


class NumericError(QAEError, ArithmeticError):
    """A numerical routine failed to converge."""


class DomainError(QAEError, ValueError):
    """A scalar function is undefined on part of an operator's spectrum."""


class ResourceError(QAEError):
    """A requested budget exceeds a configured hard cap."""


class ParseError(QAEError, ValueError):
    """Malformed text input.  ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrityError(QAEError):
    """Persisted data disagrees with a value recomputed on load."""
