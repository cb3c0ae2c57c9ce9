"""Exception types shared across the package."""


class TugaitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(TugaitError, ValueError):
    """Input data violates a basic structural requirement (shape, finiteness)."""


class ParameterError(TugaitError, ValueError):
    """A parameter value is outside its documented domain."""


class DegenerateSampleError(TugaitError):
    """Duplicate observations make a nearest-neighbor distance exactly zero."""

    def __init__(self, message: str, rows: tuple = ()):
        super().__init__(message)
        self.rows = tuple(rows)


class SchemaError(TugaitError):
    """A pose series or file is structurally incomplete (missing joints, too few frames)."""


class StationarySubjectError(TugaitError):
    """The subject barely moves, so no travel direction can be defined."""


class TooShortError(TugaitError):
    """A signal is too short for the requested windowing or spectral analysis."""


class InsufficientGaitEventsError(TugaitError):
    """Too few vertical-position peaks to compute stride statistics."""


class UndefinedSpectrumError(TugaitError):
    """Acceleration carries no power, so spectral features are undefined."""


class IncompleteFeatureError(TugaitError):
    """A feature has no contributing window."""

    def __init__(self, message: str, fields: tuple = ()):
        super().__init__(message)
        self.fields = tuple(fields)


class SingularDesignError(TugaitError):
    """The regression design matrix is rank deficient."""

    def __init__(self, message: str, columns: tuple = ()):
        super().__init__(message)
        self.columns = tuple(columns)


class ConvergenceError(TugaitError):
    """An iterative solver did not reach its tolerance within the iteration budget."""

    def __init__(self, message: str, kkt_violation: float = float("nan")):
        super().__init__(message)
        self.kkt_violation = kkt_violation


class ParseError(TugaitError):
    """A CSV or JSON input could not be parsed; carries file and line context."""

    def __init__(self, message: str, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc = f" [{loc}]"
        super().__init__(message + loc)
        self.path = path
        self.line = line
