"""Weighted least-squares fits of small-time laws on mixed power/log bases."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooNarrow, IllConditioned

_COND_LIMIT = 1e8
_MIN_POINTS = 6
_MIN_DECADES = 1.5


@dataclass(frozen=True)
class BasisTerm:
    """One regressor: coefficient * t**power * (log(1/t) if with_log)."""

    power: float
    with_log: bool = False

    def eval(self, t: np.ndarray) -> np.ndarray:
        out = t ** self.power
        if self.with_log:
            out = out * np.log(1.0 / t)
        return out

    @property
    def label(self) -> str:
        if self.power == 0.0 and not self.with_log:
            return "const"
        base = f"t^{self.power:g}"
        return f"{base}*ln(1/t)" if self.with_log else base


def power_term(q: float) -> BasisTerm:
    return BasisTerm(power=q)


def tlog_term(n: float = 1.0) -> BasisTerm:
    return BasisTerm(power=n, with_log=True)


def const_term() -> BasisTerm:
    return BasisTerm(power=0.0)


@dataclass(frozen=True)
class ExpansionReport:
    law: str
    basis: tuple[str, ...]
    fitted_coefficient: float
    ci: float
    predicted_coefficient: float | None
    relative_gap: float | None
    t_range: tuple[float, float]
    residual_slope: float | None
    all_coefficients: tuple[float, ...] = field(default=())

    def to_json(self) -> str:
        payload = {
            "law": self.law,
            "basis": list(self.basis),
            "fitted_coefficient": self.fitted_coefficient,
            "ci": self.ci,
            "predicted_coefficient": self.predicted_coefficient,
            "relative_gap": self.relative_gap,
            "t_range": list(self.t_range),
            "residual_slope": self.residual_slope,
            "all_coefficients": list(self.all_coefficients),
        }
        return json.dumps(payload, sort_keys=True)

    @property
    def within(self) -> float:
        """Relative gap, infinite when no prediction was supplied."""
        return self.relative_gap if self.relative_gap is not None else math.inf


def fit_leading(
    data,
    basis: list[BasisTerm],
    predicted: float | None = None,
    law: str | None = None,
) -> ExpansionReport:
    """Weighted least squares of (t, value, err) triples on the given basis.

    The leading coefficient is the first basis element's.  Weights are
    1/err**2 (uniform when all errs vanish); the CI uses the usual estimated
    residual scale so that truncation bias shows up in the interval.
    """
    rows = list(data)
    if len(rows) < _MIN_POINTS:
        raise GridTooNarrow(f"need at least {_MIN_POINTS} points, got {len(rows)}")
    t = np.array([r[0] for r in rows], dtype=float)
    y = np.array([r[1] for r in rows], dtype=float)
    err = np.array([r[2] for r in rows], dtype=float)
    if np.any(t <= 0.0):
        raise GridTooNarrow("t grid must be positive")
    decades = math.log10(t.max() / t.min())
    if decades < _MIN_DECADES:
        raise GridTooNarrow(
            f"t grid spans {decades:.2f} decades; need >= {_MIN_DECADES}"
        )

    if np.all(err <= 0.0):
        w = np.ones_like(err)
    else:
        floor = max(err[err > 0.0].min() * 1e-3, 1e-300)
        w = 1.0 / np.maximum(err, floor) ** 2

    X = np.column_stack([term.eval(t) for term in basis])
    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    col_norm = np.linalg.norm(Xw, axis=0)
    if np.any(col_norm == 0.0):
        raise IllConditioned("a basis column vanishes on this grid")
    cond = np.linalg.cond(Xw / col_norm)
    if cond > _COND_LIMIT:
        raise IllConditioned(
            f"basis condition number {cond:.2e} exceeds {_COND_LIMIT:.0e}"
        )

    yw = y * sw
    coef, _, _, _ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = y - X @ coef
    dof = max(len(rows) - len(basis), 1)
    scale2 = float((w * resid**2).sum() / dof)
    cov = np.linalg.inv(Xw.T @ Xw) * scale2
    ci = 1.96 * math.sqrt(max(cov[0, 0], 0.0))

    slope = None
    nonzero = np.abs(resid) > 0.0
    if nonzero.sum() >= 3:
        slope = float(np.polyfit(np.log(t[nonzero]), np.log(np.abs(resid[nonzero])), 1)[0])

    gap = None
    if predicted is not None and predicted != 0.0:
        gap = abs(coef[0] - predicted) / abs(predicted)

    return ExpansionReport(
        law=law or basis[0].label,
        basis=tuple(term.label for term in basis),
        fitted_coefficient=float(coef[0]),
        ci=ci,
        predicted_coefficient=predicted,
        relative_gap=gap,
        t_range=(float(t.min()), float(t.max())),
        residual_slope=slope,
        all_coefficients=tuple(float(c) for c in coef),
    )
