"""Heat content of rotationally invariant stable processes.

Numerical kernels, exact one-dimensional laws, Monte Carlo and quadrature
estimators for the heat content and spectral heat content of domains, and
regression utilities that compare fitted small-time coefficients against
their predicted constants.
"""

from .params import AlphaParam, Regime, alpha_param
from .errors import (
    AlphaOutOfRange,
    BudgetTooSmall,
    DomainError,
    GridTooNarrow,
    IllConditioned,
    MomentDiverges,
    RangeError,
    ReachExceeded,
    StableHeatError,
    UnsupportedRegime,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaParam",
    "Regime",
    "alpha_param",
    "StableHeatError",
    "DomainError",
    "UnsupportedRegime",
    "MomentDiverges",
    "AlphaOutOfRange",
    "ReachExceeded",
    "RangeError",
    "GridTooNarrow",
    "IllConditioned",
    "BudgetTooSmall",
    "__version__",
]
