"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SurrogacyError(Exception):
    exit_code = 5


class SchemaError(SurrogacyError):
    """CSV header is missing a required column."""

    exit_code = 2

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"missing required column: {column!r}")


class ValidationError(SurrogacyError):
    """A record violates its field contracts."""

    exit_code = 3

    def __init__(self, message, row=None, fields=()):
        self.row = row
        self.fields = tuple(fields)
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class RowParseError(ValidationError):
    """A cell could not be converted to its column type."""

    def __init__(self, row, column, value):
        self.column = column
        self.value = value
        super().__init__(f"cannot parse {value!r} in column {column!r}", row=row, fields=[column])


class LabelError(ValidationError):
    """The OS-significance label cannot be derived for a record."""


class DegenerateInputError(SurrogacyError):
    """Analysis input is empty, single-class or otherwise unusable."""

    exit_code = 4


class UndefinedStatisticError(DegenerateInputError):
    """A statistic is undefined for the given counts (zero cell, empty margin)."""


class DimensionError(SurrogacyError, ValueError):
    """Mismatched lengths or arities, or an unknown feature."""

    exit_code = 5


class StageError(SurrogacyError):
    """Wraps a module error with the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 5)
        super().__init__(f"[{stage}] {cause}")
