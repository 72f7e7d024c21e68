"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` and numerical
breakdowns from :class:`NumericalError`; the CLI maps them to exit codes
2 and 3 respectively.
"""


class SepfdaError(Exception):
    pass


class ValidationError(SepfdaError, ValueError):
    pass


class NumericalError(SepfdaError, ArithmeticError):
    pass


class InvalidInputError(ValidationError):
    pass


class InvalidConfigError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class TruncationError(ValidationError):
    pass


class UndefinedMetricError(ValidationError):
    pass


class SizeError(ValidationError):
    pass


class NotPositiveDefiniteError(NumericalError):
    pass


class InsufficientVariationError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass


class KernelDegeneracyError(NumericalError):
    pass


class EstimationError(NumericalError):
    pass
