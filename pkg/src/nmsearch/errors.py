"""Exception types shared across the package."""


class NMSearchError(Exception):
    """Base class for all package errors."""


class InvalidInputError(NMSearchError, ValueError):
    """Raised when numeric input contains NaN/inf or is otherwise unusable."""


class ShapeError(NMSearchError, ValueError):
    """Raised when array shapes do not match an operation's contract."""


class ConfigurationError(NMSearchError, ValueError):
    """Raised for invalid levels, configs, arch specs, or experiment configs."""


class DecodeError(NMSearchError, ValueError):
    """Raised when a sparse blob or checkpoint cannot be decoded."""


class SamplingExhaustedError(NMSearchError, RuntimeError):
    """Raised when no configuration can be found in any cost interval.

    Carries diagnostics: the originally chosen interval and the number of
    attempts spent per interval.
    """

    def __init__(self, message, interval=None, attempts=None):
        super().__init__(message)
        self.interval = interval
        self.attempts = attempts


class FilterError(NMSearchError, RuntimeError):
    """Raised when choice filtering would zero every level of some layer."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class TrainingError(NMSearchError, RuntimeError):
    """Raised when training hits a non-finite loss or similar fatal state."""


class StageError(NMSearchError, RuntimeError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
