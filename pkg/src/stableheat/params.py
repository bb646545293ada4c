"""Validated stability index with its regime classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DomainError


class Regime(enum.Enum):
    SUB_CRITICAL = "sub_critical"    # 0 < alpha < 1
    CAUCHY = "cauchy"                # alpha == 1
    SUPER_CRITICAL = "super_critical"  # 1 < alpha < 2
    GAUSSIAN = "gaussian"            # alpha == 2


@dataclass(frozen=True)
class AlphaParam:
    """Stability index alpha in (0, 2].

    The regime is a pure function of alpha.  alpha == 2 degenerates to a
    deterministic subordinator (S_t == t) everywhere in this package.
    """

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a <= 2.0):
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def regime(self) -> Regime:
        if self.alpha == 2.0:
            return Regime.GAUSSIAN
        if self.alpha == 1.0:
            return Regime.CAUCHY
        if self.alpha > 1.0:
            return Regime.SUPER_CRITICAL
        return Regime.SUB_CRITICAL

    @property
    def is_gaussian(self) -> bool:
        return self.alpha == 2.0

    @property
    def subordinator_index(self) -> float:
        """Index of the driving one-sided subordinator (alpha / 2)."""
        return self.alpha / 2.0

    def __float__(self) -> float:
        return self.alpha


def alpha_param(alpha) -> AlphaParam:
    """Coerce a float or AlphaParam into a validated AlphaParam."""
    if isinstance(alpha, AlphaParam):
        return alpha
    return AlphaParam(float(alpha))
