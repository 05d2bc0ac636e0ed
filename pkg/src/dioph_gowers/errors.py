"""Exception types shared across the package."""


class DiophGowersError(Exception):
    pass


class BudgetExceeded(DiophGowersError):
    """A work guard tripped; the caller should shrink the instance."""


class RankDeficient(DiophGowersError):
    pass


class DimensionError(DiophGowersError):
    pass


class AmbiguousZero(DiophGowersError):
    """Interval evaluation could not decide whether a quantity vanishes."""


class OutOfSpan(DiophGowersError):
    """An operation would leave the declared rational span of the basis."""


class DegenerateGeometry(DiophGowersError):
    pass


class NotSurjective(DiophGowersError):
    pass


class UseRationalPath(DiophGowersError):
    """Raised by reduce() for systems of full rational dimension."""


class NoSolution(DiophGowersError):
    pass


class NoNearDegeneracy(DiophGowersError):
    pass


class UnreachableCase(DiophGowersError):
    pass


class ParameterConflict(DiophGowersError):
    pass


class DegenerateInterval(DiophGowersError):
    pass


class IntegerRelationWarning(UserWarning):
    """A small integer relation among the declared constants was detected."""
