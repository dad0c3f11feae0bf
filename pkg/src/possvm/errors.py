"""Exception hierarchy shared across the package."""


class PossvmError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(PossvmError, ValueError):
    """Malformed or out-of-contract input (dimension mismatch, missing class, ...)."""


class DivergedError(PossvmError, ArithmeticError):
    """Training produced a non-finite objective."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DegenerateError(PossvmError, ArithmeticError):
    """A model or search direction collapsed (zero feature-space norm, no support vectors)."""


class UnsupportedOperationError(PossvmError, TypeError):
    """Operation not defined for this model or kernel kind."""


class ParseError(PossvmError, ValueError):
    """CSV input could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelFileError(PossvmError, ValueError):
    """A model file is truncated, malformed, or of an unknown kind/version."""
