"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
EstimationError (and subclasses) -> 4.
"""


class ConfigError(Exception):
    """Invalid configuration file, key, or command-line parameter."""


class DataError(Exception):
    """Input data violates a schema (bad column, bad row, unknown group)."""


class EstimationError(Exception):
    """An estimator could not produce a result on the given data."""


class MissingLevelError(EstimationError):
    """A requested exposure level does not occur anywhere in the sample."""


class EmptyOverlapError(EstimationError):
    """Trimming removed every unit; the effect estimate is undefined."""


class DivergenceError(EstimationError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss ({loss!r}) at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class CalibrationError(EstimationError):
    """Intercept calibration failed to bracket the target rate."""
