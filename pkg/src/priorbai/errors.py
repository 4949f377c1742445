"""Exception taxonomy shared by every module."""


class PriorBaiError(Exception):
    """Base class for all library errors."""


class NotPositiveDefinite(PriorBaiError):
    """A matrix required to be symmetric positive definite is not."""


class DimMismatch(PriorBaiError):
    """Vector/matrix dimensions are inconsistent."""


class ArmOutOfRange(PriorBaiError):
    """Arm index outside [0, k)."""


class BudgetTooSmall(PriorBaiError):
    """Budget n cannot accommodate the requested schedule."""


class RankDeficient(PriorBaiError):
    """Arm vectors do not span the ambient space."""


class NonPositiveMean(PriorBaiError):
    """A prior mean required to be positive is not."""


class NonFiniteObjective(PriorBaiError):
    """Objective evaluated to NaN/inf at an optimizer start point."""


class HeterogeneousVariance(PriorBaiError):
    """Prior variances required to be homogeneous differ."""


class NoConvergence(PriorBaiError):
    """Iterative solver hit its iteration cap (last iterate attached)."""

    def __init__(self, message, last_iterate=None):
        super().__init__(self, message)
        self.last_iterate = last_iterate


class ConfigError(PriorBaiError):
    """Invalid or malformed configuration."""
