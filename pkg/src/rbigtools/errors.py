"""Exception hierarchy shared by every module of the package."""


class RbigError(Exception):
    """Base class for all package errors."""


class DomainError(RbigError, ValueError):
    """A scalar function was called outside its mathematical domain."""


class DataError(RbigError, ValueError):
    """Input data is malformed: non-finite values, wrong shape, too few rows."""


class DegenerateMarginalError(DataError):
    """A column has fewer than two distinct values (or zero range)."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class FitError(RbigError):
    """RBIG fitting could not proceed."""


class GenerationError(RbigError, RuntimeError):
    """A synthetic-distribution generator exhausted its retry budget."""


class ModelFormatError(RbigError, ValueError):
    """A serialized model document is invalid or fails validation."""


class UsageError(RbigError, ValueError):
    """Invalid combination of options passed to the benchmark front-end."""
