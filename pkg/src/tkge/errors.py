"""Exception types shared across the package."""


class TkgeError(Exception):
    """Base class for all package errors."""


class ShapeError(TkgeError):
    """Vector/table dimensions do not line up."""


class ParseError(TkgeError):
    """A dataset file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line


class NumericError(TkgeError):
    """A non-finite value appeared where a finite one is required."""


class DegenerateSplitError(TkgeError):
    """A requested split would leave an empty train set."""


class ConstructionError(TkgeError):
    """The expressivity construction could not be completed."""


class ConstraintViolation(TkgeError):
    """A parameter-tying precondition (e.g. non-negativity) is violated."""


class VocabularyMismatchError(TkgeError):
    """A checkpoint was built against a different vocabulary."""


class SizeLimitError(TkgeError):
    """A requested construction exceeds the configured size limit."""
