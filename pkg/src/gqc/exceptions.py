"""Exception hierarchy shared across the package."""


class GqcError(Exception):
    """Base class for all package errors."""


class ShapeError(GqcError, ValueError):
    """Array or vector has the wrong shape or length."""


class SizeError(GqcError, ValueError):
    """A size parameter is out of its allowed range."""


class DomainError(GqcError, ValueError):
    """Input lies outside the mathematical domain of an operation."""


class NumericError(GqcError, ArithmeticError):
    """A non-finite value was encountered."""


class SchemaError(GqcError, KeyError):
    """A required column or field is missing."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ParseError(GqcError, ValueError):
    """A data file could not be parsed."""


class DegenerateFeatureError(GqcError, ValueError):
    """A feature is constant and cannot be min-max scaled."""

    def __init__(self, column):
        super().__init__(f"feature {column!r} is constant on the fitting data")
        self.column = column


class TrainingError(GqcError, RuntimeError):
    """Training diverged."""

    def __init__(self, message, epoch=None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch


class ConfigError(GqcError, ValueError):
    """A configuration value is invalid."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
