"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` used by the command-line driver:
2 for validation failures, 3 for budget/size failures, 4 for IO problems.
"""


class AvqcError(Exception):
    exit_code = 2


class ValidationError(AvqcError, ValueError):
    """An input object fails one of its invariants."""


class DimensionMismatch(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NonSquare(ValidationError):
    pass


class BadWeights(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class BadParams(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class SizeError(AvqcError):
    exit_code = 3


class DimensionOverflow(SizeError):
    pass


class UnsupportedSize(SizeError):
    pass


class TooLarge(SizeError):
    pass


class BudgetExceeded(SizeError):
    pass


class NoSolutionBelowCap(SizeError):
    pass
