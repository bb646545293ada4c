"""Shared result containers for heat content estimators."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class EstimateMethod(enum.Enum):
    TAIL_QUADRATURE_1D = "tail_quadrature_1d"
    SUBORDINATION_QUADRATURE = "subordination_quadrature"
    DIRECT_MC = "direct_mc"
    CAUCHY_SLAB_CLOSED_FORM = "cauchy_slab_closed_form"
    GAUSSIAN_QUADRATURE = "gaussian_quadrature"


@dataclass(frozen=True)
class HeatContentEstimate:
    """Value of a heat content functional with its error bar.

    ``err`` is a quadrature error bound for deterministic routes and one
    standard error for Monte Carlo routes.
    """

    value: float
    err: float
    t: float
    method: EstimateMethod

    def agrees_with(self, other: "HeatContentEstimate", n_sigma: float = 3.0) -> bool:
        gap = abs(self.value - other.value)
        return gap <= n_sigma * (self.err + other.err)
