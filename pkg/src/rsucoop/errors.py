"""Exception hierarchy.

Validation problems derive from ``ValueError`` and numeric breakdowns from
``ArithmeticError`` so callers can catch either family without importing
this module.
"""


class RsuCoopError(Exception):
    """Base class for every error raised by the package."""


class InputError(RsuCoopError, ValueError):
    """Invalid input that the caller can fix."""


class NumericError(RsuCoopError, ArithmeticError):
    """A computation broke down numerically."""


# geometry
class ZeroVector(InputError):
    pass


class NoIntersection(InputError):
    pass


class DegenerateGeometry(InputError):
    pass


class AssumptionViolated(InputError):
    pass


# array
class PhaseAmbiguity(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class EmptyDirections(InputError):
    pass


class DimensionMismatch(InputError):
    pass


# beamforming
class SingularSystem(NumericError):
    pass


class NonFinite(NumericError):
    pass


class AllZeroResponse(NumericError):
    pass


class InsufficientCoverage(InputError):
    pass


# detection
class QuadratureFailure(NumericError):
    pass


# registration
class NoVisibility(InputError):
    pass


# configuration
class ValidationError(InputError):
    """A configuration value is missing, of the wrong type or out of range.

    Attributes
    ----------
    field : str
        Dotted path of the offending field, e.g. ``rsus[2].height``.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ParseError(InputError):
    """The configuration file is not well-formed YAML."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
