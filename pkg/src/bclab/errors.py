"""Exception hierarchy. The CLI maps each family onto an exit code."""


class BCLabError(Exception):
    """Base class for all library errors."""

    exit_code = 1
    kind = "error"


class ValidationError(BCLabError, ValueError):
    """Bad arguments, invalid models, failed invariants."""

    exit_code = 2
    kind = "validation"


class ModelError(ValidationError):
    kind = "model"


class UnsupportedFeatureError(ValidationError):
    kind = "unsupported-feature"


class InvariantViolation(ValidationError):
    kind = "invariant-violation"


class InsufficientDataError(ValidationError):
    kind = "insufficient-data"


class ResourceError(BCLabError):
    """An enumeration or coordinate budget would be exceeded."""

    exit_code = 3
    kind = "resource"


class ResolutionError(BCLabError):
    """A computation needs coordinates the available window does not hold."""

    exit_code = 4
    kind = "resolution"


class CoordinateRangeError(ResolutionError, IndexError):
    """Direct access to a coordinate outside a window."""

    kind = "range"

    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = missing
