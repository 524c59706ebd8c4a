"""Exception hierarchy. The CLI maps each family onto an exit code."""


class RoadGHGError(Exception):
    """Base class for all package errors."""


class ValidationError(RoadGHGError, ValueError):
    """Input data violates a schema or invariant."""


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class SchemaError(ValidationError):
    """A required field or section is missing."""


class DegenerateInputError(ValidationError):
    """Input carries no usable signal (e.g. zero-variance raster bands)."""


class SpeedUnavailableError(RoadGHGError):
    """No live speed could be estimated and no historical speed was supplied."""


class LeakageError(RoadGHGError):
    """Test-year records reached a training routine."""


class DivergenceError(RoadGHGError):
    def __init__(self, message: str, last_stable_epoch: int | None):
        self.last_stable_epoch = last_stable_epoch
        super().__init__(message)
