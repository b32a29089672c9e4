"""Exception types shared across the package."""

from __future__ import annotations


class LfcoverError(Exception):
    """Base class for all errors raised by this package."""


class NotATopology(LfcoverError):
    """An open-set family fails a topology axiom."""

    def __init__(self, message: str, pair: tuple | None = None):
        super().__init__(message)
        self.pair = pair


class BudgetExceeded(LfcoverError):
    """An enumeration or carrier size exceeds the configured budget."""


class MismatchedCarrier(LfcoverError):
    """Two objects live on different spaces or different sub-carriers."""


class InvalidCover(LfcoverError):
    """A family of subsets does not cover its designated carrier."""


class NotAPartition(LfcoverError):
    """A family of subsets is not a partition of the carrier."""


class NotInLambda(LfcoverError):
    """A cover is not a member of the locally fine coreflection."""


class PreconditionFailed(LfcoverError):
    """A documented precondition does not hold; ``clause`` names it."""

    def __init__(self, message: str, clause: str = ""):
        super().__init__(message)
        self.clause = clause


class HypothesisViolated(PreconditionFailed):
    """A stated hypothesis of a check fails on the supplied instance."""


class NotKScattered(LfcoverError):
    """The derivative iteration stalls on a non-empty set."""


class InvalidStrategy(LfcoverError):
    """A strategy table violates the relatively-open-choice rule."""

    def __init__(self, message: str, subset: int | None = None):
        super().__init__(message)
        self.subset = subset


class IllegalMove(LfcoverError):
    """A game move breaks a rule; ``player`` and ``rule`` identify it."""

    def __init__(self, message: str, player: str = "", rule: str = ""):
        super().__init__(message)
        self.player = player
        self.rule = rule


class NotProperSubset(LfcoverError):
    """The finite blocker is requested for the whole product."""


class NotNormal(LfcoverError):
    """A cover is not normal."""


class NotSupercomplete(LfcoverError):
    """A factor pre-uniformity misses some open cover."""


class EmptyInput(LfcoverError):
    """An operation requiring non-empty sets received an empty one."""


class SupportsNotDisjoint(LfcoverError):
    """Basic-set supports are required to be pairwise disjoint."""
