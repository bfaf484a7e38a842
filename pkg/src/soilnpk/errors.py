"""Exception hierarchy shared by all modules."""


class SoilNPKError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(SoilNPKError, ValueError):
    pass


class ParseError(SoilNPKError, ValueError):
    """Malformed input file. ``row`` is 1-based."""

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class InsufficientDataError(ValidationError):
    pass


class InfeasibleDilutionError(ValidationError):
    pass


class DegenerateFeatureError(ValidationError):
    def __init__(self, column, name=None):
        self.column = column
        label = name if name is not None else f"column {column}"
        super().__init__(f"{label} has zero variance")


class SingularDesignError(ValidationError):
    pass


class DivergenceError(SoilNPKError, FloatingPointError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"training loss became non-finite at epoch {epoch}")


class UndefinedScoreError(ValidationError):
    pass


class CalibrationError(SoilNPKError, ValueError):
    pass


class CalibrationMissingError(CalibrationError, KeyError):
    def __str__(self):
        return self.args[0] if self.args else ""


class CalibrationDegenerateError(CalibrationError):
    pass
