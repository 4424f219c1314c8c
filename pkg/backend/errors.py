"""
Exception hierarchy shared by every forecasting module.

The CLI maps these to exit codes, so raise the most specific one.
"""


class ForecastToolError(Exception):
    """Base class for all errors raised by the toolkit"""
    pass


class DataError(ForecastToolError):
    """Input data is missing, malformed or too short for the operation"""
    pass


class NumericalError(ForecastToolError):
    """A numerical procedure diverged or failed to converge"""
    pass


class ConfigError(ForecastToolError):
    """Invalid configuration value, unknown key or bad command usage"""
    pass


class StageError(ForecastToolError):
    """
    Failure inside one stage of a multi-stage fit

    The original exception is kept as ``__cause__`` and ``cause``.
    """

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def root(self) -> Exception:
        """Innermost non-stage exception"""
        err: Exception = self
        while isinstance(err, StageError):
            err = err.cause
        return err
