"""Heat content of an interval: quadrature ground truth and small-time laws.

For an interval of length L the heat content reduces to a tail integral,

    H(t) = 2 t**(1/alpha) * integral_0^{L t**(-1/alpha)} P(X_1 >= w) dw,

valid for every alpha and t; this is the module's oracle.  The small-time
expansions split by regime:

  * 1 < alpha <= 2 : single term (2/pi) Gamma(1 - 1/alpha) t**(1/alpha),
  * alpha == 1     : exact closed formula with a t*log(1/t) leading term,
  * 0 < alpha < 1  : polynomial terms up to floor(1/alpha), a C_alpha
                     t**(1/alpha) term, and for alpha == 1/N a resonant
                     t**N log(1/t) term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc, gammaln

from . import kernel
from .errors import DomainError, RangeError
from .params import AlphaParam, Regime, alpha_param
from .results import EstimateMethod, HeatContentEstimate

_W_SWITCH = 50.0


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("interval endpoints must be finite")
        if not self.a < self.b:
            raise DomainError(f"need a < b, got ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a


# ---------------------------------------------------------------------------
# tail integrals of the unit-time law
# ---------------------------------------------------------------------------

def _survival_integral_series(alpha: float, w_from: float, w_to: float):
    """integral_{w_from}^{w_to} P(X_1 >= w) dw by termwise integration.

    Exact per-term antiderivatives; n*alpha == 1 contributes log(w_to/w_from).
    ``w_to`` may be inf when alpha > 1.  Returns (value, error_bound).
    """
    a = alpha
    if not math.isfinite(w_to) and a <= 1.0:
        raise DomainError("infinite tail integral requires alpha > 1")
    n = np.arange(1, 300, dtype=float)
    ln_coeff = gammaln(n * a + 1.0) - gammaln(n + 1.0) - np.log(n * a)
    signs = np.where(np.arange(1, 300) % 2 == 1, 1.0, -1.0)
    sines = np.sin(math.pi * n * a / 2.0)

    na = n * a
    log_from = math.log(w_from)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        from_part = np.exp((1.0 - na) * log_from)
        if math.isfinite(w_to):
            to_part = np.exp((1.0 - na) * math.log(w_to))
        else:
            to_part = np.zeros_like(na)
        resonant = np.abs(na - 1.0) < 1e-12
        ints = np.where(
            resonant,
            (math.log(w_to) - log_from) if math.isfinite(w_to) else np.inf,
            (from_part - to_part) / np.where(resonant, 1.0, na - 1.0),
        )
        mags = np.exp(ln_coeff) / math.pi * np.abs(ints)
        terms = signs * np.exp(ln_coeff) / math.pi * sines * ints
    mags = np.where(np.isfinite(mags), mags, np.inf)

    total = 0.0
    if a >= 1.0:
        # asymptotic regime: truncate at the smallest term
        m = int(np.argmin(mags))
        if m < 1:
            raise RuntimeError("tail series unusable at this range")
        return float(terms[:m].sum()), float(mags[m])
    running_max = 0.0
    for i in range(len(terms)):
        total += terms[i]
        running_max = max(running_max, mags[i])
        if i >= 1 and mags[i] < 1e-14 * max(running_max, 1e-300) and mags[i] < 0.5 * mags[i - 1]:
            return float(total), float(2.0 * mags[i])
    raise RuntimeError("tail series did not certify")


def survival_integral(alpha, upper: float) -> tuple[float, float]:
    """integral_0^upper P(X_1 >= w) dw with an absolute error bound.

    ``upper`` may be inf when the tail is integrable (alpha > 1).
    """
    ap = alpha_param(alpha)
    if upper <= 0.0:
        return 0.0, 0.0
    if ap.is_gaussian:
        hi = min(upper, 45.0)
        val, err = integrate.quad(lambda w: 0.5 * erfc(0.5 * w), 0.0, hi,
                                  epsabs=1e-16, epsrel=1e-12, limit=200)
        return val, err + 1e-200
    if ap.regime is Regime.CAUCHY:
        hi = min(upper, _W_SWITCH)
        val, err = integrate.quad(lambda w: 0.5 - math.atan(w) / math.pi, 0.0, hi,
                                  epsabs=1e-16, epsrel=1e-12, limit=200)
        if upper > _W_SWITCH:
            v2, e2 = integrate.quad(
                lambda u: math.atan(math.exp(-u)) / math.pi * math.exp(u),
                math.log(_W_SWITCH), math.log(upper),
                epsabs=1e-16, epsrel=1e-12, limit=300,
            )
            val, err = val + v2, err + e2
        return val, err
    surv = kernel.get_survival(ap)
    hi = min(upper, _W_SWITCH)
    val, err = integrate.quad(lambda w: float(surv(w)[0]), 0.0, hi,
                              epsabs=1e-15, epsrel=1e-11, limit=300)
    err += 1e-9 * val  # spline accuracy allowance
    if upper > _W_SWITCH:
        v2, e2 = _survival_integral_series(ap.alpha, _W_SWITCH, upper)
        val, err = val + v2, err + e2
    return val, err


def heat_content_interval_exact(alpha, omega: Interval, t: float) -> HeatContentEstimate:
    """Ground-truth heat content of the interval by tail quadrature."""
    ap = alpha_param(alpha)
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    scale = t ** (1.0 / ap.alpha)
    upper = omega.length / scale
    ell, err = survival_integral(ap, upper)
    return HeatContentEstimate(
        value=2.0 * scale * ell,
        err=2.0 * scale * err,
        t=t,
        method=EstimateMethod.TAIL_QUADRATURE_1D,
    )


def cauchy_closed_form(omega: Interval, t: float) -> float:
    """Exact heat content of an interval at alpha == 1, valid for all t."""
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    L = omega.length
    return (2.0 / math.pi) * (
        t * math.log(1.0 / t)
        + L * math.atan(t / L)
        + 0.5 * t * math.log(t * t + L * L)
    )


# ---------------------------------------------------------------------------
# expansion coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionTerm:
    power: float
    with_log: bool      # multiplies log(1/t) when True
    coefficient: float

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = self.coefficient * t_arr ** self.power
        if self.with_log:
            out = out * np.log(1.0 / t_arr)
        return out

    def describe(self) -> str:
        base = f"t^{self.power:g}"
        return f"{base}*ln(1/t)" if self.with_log else base


@dataclass(frozen=True)
class Expansion1D:
    alpha: AlphaParam
    interval: Interval
    terms: tuple[ExpansionTerm, ...]
    remainder_power: float
    t_max: float    # validity: 0 < t < t_max

    def prefix(self, t):
        t_arr = np.asarray(t, dtype=float)
        total = np.zeros_like(t_arr)
        for term in self.terms:
            total = total + term.eval(t_arr)
        return total

    @property
    def leading(self) -> ExpansionTerm:
        return self.terms[0]


def _stable_coefficient_n(alpha: float, length: float, n: int) -> float:
    """Polynomial coefficient of t**n in the sub-critical expansion."""
    na = n * alpha
    mag = math.exp(gammaln(na) - gammaln(n + 1.0)) / (1.0 - na)
    return (
        (2.0 / math.pi)
        * (-1.0) ** (n - 1)
        * mag
        * length ** (1.0 - na)
        * math.sin(math.pi * na / 2.0)
    )


def _sato_a(alpha: float, n: int) -> float:
    return (
        (-1.0) ** (n - 1)
        * math.exp(gammaln(n * alpha + 1.0) - gammaln(n + 1.0))
        * math.sin(math.pi * n * alpha / 2.0)
        / math.pi
    )


def _r_series(alpha: float, n_from: int, n_to_inf: bool = True, n_to: int = 0,
              length_power: float | None = None) -> float:
    """Sum of a_n / (n alpha (1 - n alpha)) [* L**(1-n alpha)] over n."""
    total = 0.0
    prev = math.inf
    n = n_from
    while n < 400:
        if n_to and n > n_to:
            break
        na = n * alpha
        if abs(na - 1.0) < 1e-12:
            raise ValueError("resonant index must be excluded from this sum")
        term = _sato_a(alpha, n) / (na * (1.0 - na))
        if length_power is not None:
            term *= length_power ** (1.0 - na)
        total += term
        mag = abs(term)
        if n_to_inf and not n_to and n > n_from + 2 and mag < 1e-16 and mag < prev:
            break
        prev = mag
        n += 1
    return total


def _integral_survival_0_1(alpha) -> float:
    val, _ = survival_integral(alpha, 1.0)
    return val


def expansion_terms(alpha, omega: Interval) -> Expansion1D:
    """All closed-form coefficients of the small-time law, leading term first.

    The t**(1/alpha) constant in the sub-critical regime (and the t**N
    constant at alpha == 1/N) is evaluated numerically from its defining
    integral and series sums.
    """
    ap = alpha_param(alpha)
    a = ap.alpha
    L = omega.length

    if ap.regime in (Regime.SUPER_CRITICAL, Regime.GAUSSIAN):
        coeff = (2.0 / math.pi) * math.exp(gammaln(1.0 - 1.0 / a))
        rem = 1.5 if ap.is_gaussian else 1.0
        return Expansion1D(
            alpha=ap, interval=omega,
            terms=(ExpansionTerm(1.0 / a, False, coeff),),
            remainder_power=rem, t_max=math.inf,
        )

    if ap.regime is Regime.CAUCHY:
        return Expansion1D(
            alpha=ap, interval=omega,
            terms=(
                ExpansionTerm(1.0, True, 2.0 / math.pi),
                ExpansionTerm(1.0, False, (2.0 / math.pi) * (1.0 + math.log(L))),
            ),
            remainder_power=3.0, t_max=math.inf,
        )

    # sub-critical
    t_max = min(L ** a, math.exp(-1.0))
    inv = 1.0 / a
    n_whole = round(inv)
    resonant = abs(inv - n_whole) < 1e-9

    if not resonant:
        n_poly = math.floor(inv)
        terms = [
            ExpansionTerm(float(n), False, _stable_coefficient_n(a, L, n))
            for n in range(1, n_poly + 1)
        ]
        c_alpha = 2.0 * (_integral_survival_0_1(ap) - _r_series(a, 1))
        terms.append(ExpansionTerm(inv, False, c_alpha))
        terms.sort(key=lambda tm: (tm.power, not tm.with_log))
        return Expansion1D(
            alpha=ap, interval=omega, terms=tuple(terms),
            remainder_power=float(n_poly + 1), t_max=t_max,
        )

    n_res = int(n_whole)  # alpha == 1/N
    terms = [
        ExpansionTerm(float(n), False, _stable_coefficient_n(a, L, n))
        for n in range(1, n_res)
    ]
    res_coeff = (-1.0) ** (n_res - 1) * 2.0 / (math.pi * math.exp(gammaln(n_res)))
    terms.append(ExpansionTerm(float(n_res), True, res_coeff))
    a_n = _sato_a(a, n_res)
    c_star = (
        a_n * math.log(L)
        - _r_series(a, 1, n_to=n_res - 1)
        - _r_series(a, n_res + 1)
    )
    c_n = 2.0 * (_integral_survival_0_1(ap) + c_star)
    terms.append(ExpansionTerm(float(n_res), False, c_n))
    terms.sort(key=lambda tm: (tm.power, not tm.with_log))
    return Expansion1D(
        alpha=ap, interval=omega, terms=tuple(terms),
        remainder_power=float(n_res + 1), t_max=t_max,
    )


# ---------------------------------------------------------------------------
# remainder slope diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RemainderReport:
    alpha: AlphaParam
    t_grid: tuple[float, ...]
    residuals: tuple[float, ...]
    claimed_power: float
    fitted_slope: float

    @property
    def passes(self) -> bool:
        return self.fitted_slope >= self.claimed_power - 0.1


def remainder_check(alpha, omega: Interval, t_grid) -> RemainderReport:
    """Fit the log-log slope of (oracle - expansion prefix) on a t grid."""
    ap = alpha_param(alpha)
    exp1d = expansion_terms(ap, omega)
    t_arr = np.sort(np.asarray(t_grid, dtype=float))
    if t_arr[0] <= 0.0:
        raise RangeError("t grid must be positive")
    if t_arr[-1] >= exp1d.t_max:
        raise RangeError(
            f"t grid exceeds expansion validity (t < {exp1d.t_max:g})"
        )
    vals, errs = [], []
    for t in t_arr:
        est = heat_content_interval_exact(ap, omega, float(t))
        vals.append(est.value)
        errs.append(est.err)
    resid = np.abs(np.asarray(vals) - exp1d.prefix(t_arr))
    errs = np.asarray(errs)

    if np.all(resid <= 10.0 * errs + 1e-300):
        slope = math.inf   # remainder below quadrature resolution
    else:
        keep = resid > 10.0 * errs
        if keep.sum() < 3:
            slope = math.inf
        else:
            slope = float(
                np.polyfit(np.log(t_arr[keep]), np.log(resid[keep]), 1)[0]
            )
    return RemainderReport(
        alpha=ap,
        t_grid=tuple(float(t) for t in t_arr),
        residuals=tuple(float(r) for r in resid),
        claimed_power=exp1d.remainder_power,
        fitted_slope=slope,
    )


def positive_part_mean(alpha) -> float:
    """E[X_1; X_1 >= 0] by quadrature; equals Gamma(1-1/alpha)/pi for alpha > 1."""
    ap = alpha_param(alpha)
    if ap.alpha <= 1.0:
        raise DomainError("first moment diverges for alpha <= 1")
    val, _ = survival_integral(ap, math.inf)
    return val
