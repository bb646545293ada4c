"""Exception types shared across the package."""


class StableHeatError(Exception):
    """Base class for all package errors."""


class DomainError(StableHeatError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class UnsupportedRegime(StableHeatError, ValueError):
    """The requested operation is undefined for this stability index."""


class MomentDiverges(StableHeatError, ValueError):
    """Requested fractional moment does not exist."""


class AlphaOutOfRange(StableHeatError, ValueError):
    """Stability index outside the admissible range for the operation."""


class ReachExceeded(StableHeatError, ValueError):
    """Tube offset exceeds the reach/inradius of the shape."""


class RangeError(StableHeatError, ValueError):
    """A grid or argument lies outside the validity window of an expansion."""


class GridTooNarrow(StableHeatError, ValueError):
    """The time grid does not span enough decades for a stable fit."""


class IllConditioned(StableHeatError, ValueError):
    """Fit basis is numerically collinear on the given grid."""


class BudgetTooSmall(StableHeatError, ValueError):
    """A Monte Carlo budget cannot reach the requested accuracy."""
