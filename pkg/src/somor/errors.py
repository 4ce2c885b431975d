"""Exception hierarchy.

Class names double as the error identifiers printed by the command line
tool, so they deliberately carry no ``Error`` suffix.
"""


class SomorError(Exception):
    """Base class for every error raised by this package."""


class UsageError(SomorError, ValueError):
    """Malformed input: bad shapes, unreadable files, invalid arguments."""


class NumericalError(SomorError, ArithmeticError):
    """A numerical precondition of a construction does not hold."""


class NonFinite(UsageError):
    pass


class DimensionMismatch(UsageError):
    pass


class ParseError(UsageError):
    pass


class OrderTooHigh(UsageError):
    pass


class ZeroDirection(UsageError):
    pass


class DuplicateFrequency(UsageError):
    pass


class WrongOutputStructure(UsageError):
    pass


class SpectraOverlap(NumericalError):
    pass


class SingularMass(NumericalError):
    pass


class NearPole(NumericalError):
    pass


class ObservabilityFailure(NumericalError):
    pass


class ControllabilityFailure(NumericalError):
    pass


class PencilDegenerate(NumericalError):
    pass


class NonNegativeEigenvalue(NumericalError):
    pass


class PassivityPreconditionViolated(NumericalError):
    pass


class RankDeficientPi(NumericalError):
    pass


class SingularProduct(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class NoNullSpace(NumericalError):
    pass


class DividedDifferenceBlowup(NumericalError):
    pass


class SingularFrequency(NumericalError):
    pass


class SingularShift(NumericalError):
    pass
