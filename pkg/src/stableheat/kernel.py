"""Radial transition density of the isotropic stable process in R^d.

Evaluation routes, in order of preference:
  * closed forms for alpha == 2 (Gaussian at twice speed) and alpha == 1
    (Cauchy/Poisson kernel),
  * for d == 1, 0 < alpha < 1 and large scaled radius, a power series in
    z**(-alpha) with a certified truncation remainder,
  * otherwise the subordination integral of the Gaussian kernel against the
    one-sided subordinator density.

The time variable scales out:  p_t(r) = t**(-d/alpha) * p_1(r * t**(-1/alpha)).
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import erfc, gammaln

from . import subordinator
from .errors import DomainError, UnsupportedRegime
from .params import AlphaParam, alpha_param


class KernelMethod(enum.Enum):
    CLOSED_FORM_GAUSSIAN = "closed_form_gaussian"
    CLOSED_FORM_CAUCHY = "closed_form_cauchy"
    SATO_SERIES = "sato_series"
    SUBORDINATION_QUADRATURE = "subordination_quadrature"


@dataclass(frozen=True)
class KernelValue:
    value: float
    method: KernelMethod
    err_estimate: float


@dataclass(frozen=True)
class TailConstant:
    """Constant in the small-time limit  p_t(r)/t -> value / r**(d+alpha)."""

    alpha: AlphaParam
    d: int
    value: float


# ---------------------------------------------------------------------------
# closed forms and constants
# ---------------------------------------------------------------------------

def gaussian_kernel(d: int, t: float, r: float) -> float:
    """(4 pi t)**(-d/2) * exp(-r^2 / 4t); per-coordinate variance is 2t."""
    expo = -r * r / (4.0 * t)
    if expo < -745.0:
        return 0.0
    return (4.0 * math.pi * t) ** (-d / 2.0) * math.exp(expo)


def cauchy_normalisation(d: int) -> float:
    """k_d = Gamma((d+1)/2) / pi**((d+1)/2)."""
    return math.exp(gammaln((d + 1) / 2.0)) / math.pi ** ((d + 1) / 2.0)


def cauchy_kernel(d: int, t: float, r: float) -> float:
    return cauchy_normalisation(d) * t / (t * t + r * r) ** ((d + 1) / 2.0)


def tail_limit_constant(alpha, d: int) -> TailConstant:
    """Constant governing p_t(r)/t as t -> 0, for 0 < alpha < 2."""
    ap = alpha_param(alpha)
    if ap.is_gaussian:
        raise UnsupportedRegime("tail limit constant defined for alpha < 2")
    a = ap.alpha
    value = (
        a
        * 2.0 ** (a - 1.0)
        * math.pi ** (-1.0 - d / 2.0)
        * math.sin(math.pi * a / 2.0)
        * math.exp(gammaln((d + a) / 2.0) + gammaln(a / 2.0))
    )
    return TailConstant(alpha=ap, d=d, value=value)


def kernel_tail_limit(alpha, d: int, r: float) -> float:
    """Limit of p_t(r)/t as t -> 0, i.e. the jump intensity at radius r."""
    if r <= 0.0:
        raise DomainError("r must be positive")
    ap = alpha_param(alpha)
    const = tail_limit_constant(ap, d).value
    return const / r ** (d + ap.alpha)


def tail_limit_check(alpha, d: int, r: float, ts=(1e-2, 1e-3, 1e-4)) -> list[float]:
    """Relative errors of p_t(r)/t against the limit, one per t."""
    limit = kernel_tail_limit(alpha, d, r)
    out = []
    for t in ts:
        val = kernel_eval(alpha, d, t, r).value / t
        out.append(abs(val - limit) / limit)
    return out


# ---------------------------------------------------------------------------
# one-dimensional power series (0 < alpha < 1 convergent; asymptotic above)
# ---------------------------------------------------------------------------

_SERIES_NMAX = 300


@dataclass(frozen=True)
class SatoCoefficients:
    alpha: float
    a: np.ndarray  # a[n-1] is the n-th coefficient


def sato_coefficients(alpha, n_max: int) -> SatoCoefficients:
    """Coefficients a_n = (-1)**(n-1) Gamma(n a + 1)/(pi n!) sin(pi n a/2)."""
    ap = alpha_param(alpha)
    a = ap.alpha
    n = np.arange(1, n_max + 1, dtype=float)
    ln_mag = gammaln(n * a + 1.0) - gammaln(n + 1.0)
    signs = np.where(np.arange(1, n_max + 1) % 2 == 1, 1.0, -1.0)
    coeffs = signs * np.exp(ln_mag) * np.sin(math.pi * n * a / 2.0) / math.pi
    return SatoCoefficients(alpha=a, a=coeffs)


def sato_density(alpha, z: float, tol: float = 1e-12):
    """Series value of the d=1 density at z > 0 with a truncation bound.

    Returns (value, remainder_bound, n_terms) or None when the truncation
    cannot be certified (convergent regime) or the minimal term is not small
    enough (asymptotic regime, alpha >= 1).
    """
    ap = alpha_param(alpha)
    a = ap.alpha
    if z <= 1.0:
        return None
    n = np.arange(1, _SERIES_NMAX + 1, dtype=float)
    ln_mag = gammaln(n * a + 1.0) - gammaln(n + 1.0) + (-1.0 - n * a) * math.log(z)
    return _certified_sum(ln_mag, np.sin(math.pi * n * a / 2.0), a < 1.0, tol)


def survival_tail_series(alpha, w: float, tol: float = 1e-13):
    """P(X_1 >= w) as sum a_n/(n alpha) w**(-n alpha), with remainder bound."""
    ap = alpha_param(alpha)
    a = ap.alpha
    if w <= 1.0:
        return None
    n = np.arange(1, _SERIES_NMAX + 1, dtype=float)
    ln_mag = (
        gammaln(n * a + 1.0)
        - gammaln(n + 1.0)
        - np.log(n * a)
        - n * a * math.log(w)
    )
    return _certified_sum(ln_mag, np.sin(math.pi * n * a / 2.0), a < 1.0, tol)


def _certified_sum(ln_mag: np.ndarray, sines: np.ndarray, convergent: bool, tol):
    bounds = np.exp(ln_mag) / math.pi
    signs = np.where(np.arange(1, len(ln_mag) + 1) % 2 == 1, 1.0, -1.0)
    terms = signs * bounds * sines
    lead = bounds[0]
    if lead == 0.0:
        return 0.0, 0.0, 0
    if convergent:
        for m in range(1, len(bounds) - 1):
            if bounds[m] < tol * lead and bounds[m] < 0.5 * bounds[m - 1]:
                return float(terms[:m].sum()), float(2.0 * bounds[m]), m
        return None
    # asymptotic: truncate at the smallest magnitude term
    m = int(np.argmin(bounds))
    if m < 1 or bounds[m] > tol * lead:
        return None
    return float(terms[:m].sum()), float(bounds[m]), m


# ---------------------------------------------------------------------------
# subordination quadrature
# ---------------------------------------------------------------------------

def _unit_density_subordination(alpha, d: int, z) -> np.ndarray:
    """p_1 at scaled radius z (vectorised) via the subordinator table."""
    table = subordinator.get_table(alpha)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    s = table.nodes[None, :]
    with np.errstate(over="ignore", under="ignore"):
        f = (4.0 * math.pi * s) ** (-d / 2.0) * np.exp(
            -(z_arr[:, None] ** 2) / (4.0 * s)
        )
    return f @ table.weights


def unit_kernel(alpha, d: int, z: float) -> float:
    """p_1^(alpha)(z) in R^d for 0 < alpha < 2 (quadrature route)."""
    return float(_unit_density_subordination(alpha, d, z)[0])


def kernel_eval(alpha, d: int, t: float, r: float) -> KernelValue:
    """Radial density p_t(r), dispatching on regime and radius."""
    ap = alpha_param(alpha)
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    if r < 0.0:
        raise DomainError("r must be non-negative")
    if ap.is_gaussian:
        v = gaussian_kernel(d, t, r)
        # v == 0 only on exponential underflow; error covers the underflow
        err = 1e-15 * v if v > 0.0 else 1e-300
        return KernelValue(v, KernelMethod.CLOSED_FORM_GAUSSIAN, err)
    if ap.regime.value == "cauchy":
        v = cauchy_kernel(d, t, r)
        return KernelValue(v, KernelMethod.CLOSED_FORM_CAUCHY, 1e-15 * v)
    scale = t ** (-1.0 / ap.alpha)
    z = r * scale
    if d == 1 and ap.alpha < 1.0 and z > 3.0:
        res = sato_density(ap, z)
        if res is not None:
            v, bound, _ = res
            return KernelValue(v * scale, KernelMethod.SATO_SERIES, bound * scale)
    v = unit_kernel(ap, d, z) * t ** (-d / ap.alpha)
    return KernelValue(
        max(v, 0.0), KernelMethod.SUBORDINATION_QUADRATURE, 1e-10 * abs(v) + 1e-300
    )


def normalization_check(alpha, d: int, t: float = 1.0) -> float:
    """Radial quadrature of the full mass; should be 1."""
    ap = alpha_param(alpha)
    if ap.is_gaussian:
        return 1.0
    omega = 2.0 * math.pi ** (d / 2.0) / math.exp(gammaln(d / 2.0))

    def radial(z):
        return z ** (d - 1) * float(_unit_density_subordination(ap, d, z)[0])

    inner, _ = integrate.quad(radial, 0.0, 5.0, limit=200)
    outer, _ = integrate.quad(
        lambda u: radial(math.exp(u)) * math.exp(u), math.log(5.0), math.log(1e9),
        limit=300,
    )
    # remaining tail from the power decay  p ~ A z**(-d-alpha)
    const = tail_limit_constant(ap, d).value
    tail = omega * const / ap.alpha * (1e9) ** (-ap.alpha)
    return omega * (inner + outer) + tail


# ---------------------------------------------------------------------------
# one-dimensional survival P(X_1 >= w) with a cached interpolant
# ---------------------------------------------------------------------------

_SURVIVAL_W_SWITCH = 50.0


def _survival_quadrature_vec(alpha, w: np.ndarray) -> np.ndarray:
    """P(X_1 >= w), w <= ~switch, via E[0.5 erfc(w / (2 sqrt(S_1)))]."""
    table = subordinator.get_table(alpha)
    w_arr = np.asarray(w, dtype=float)
    sqrt_s = 2.0 * np.sqrt(table.nodes)
    out = np.empty(w_arr.shape)
    for lo in range(0, len(w_arr), 256):
        block = w_arr[lo:lo + 256, None] / sqrt_s[None, :]
        out[lo:lo + 256] = (0.5 * erfc(block)) @ table.weights
    return out + 0.5 * table.tail_mass


class SurvivalTable:
    """Cached spline of P(X_1 >= w) over a log grid, with series tail."""

    def __init__(self, alpha):
        self.ap = alpha_param(alpha)
        a = self.ap.alpha
        self.w_lo, self.w_hi = 1e-6, _SURVIVAL_W_SWITCH * 1.1
        grid = np.exp(np.linspace(math.log(self.w_lo), math.log(self.w_hi), 2500))
        vals = _survival_quadrature_vec(self.ap, grid)
        self._spline = CubicSpline(np.log(grid), vals)
        self.density_at_zero = math.exp(gammaln(1.0 + 1.0 / a)) / math.pi

    def __call__(self, w) -> np.ndarray:
        w_arr = np.atleast_1d(np.asarray(w, dtype=float))
        out = np.empty_like(w_arr)
        tiny = w_arr < self.w_lo
        out[tiny] = 0.5 - w_arr[tiny] * self.density_at_zero
        big = w_arr > _SURVIVAL_W_SWITCH
        for i in np.nonzero(big)[0]:
            out[i] = survival_tail_series(self.ap, float(w_arr[i]))[0]
        mid = ~tiny & ~big
        out[mid] = self._spline(np.log(w_arr[mid]))
        return out


_survival_tables: dict[float, SurvivalTable] = {}
_survival_lock = threading.Lock()


def get_survival(alpha) -> SurvivalTable:
    ap = alpha_param(alpha)
    key = round(ap.alpha, 12)
    with _survival_lock:
        tab = _survival_tables.get(key)
    if tab is None:
        tab = SurvivalTable(ap)
        with _survival_lock:
            _survival_tables[key] = tab
    return tab


def survival(alpha, w: float) -> float:
    """P(X_1 >= w) for the symmetric 1-d law, any regime, w >= 0."""
    ap = alpha_param(alpha)
    if w < 0.0:
        raise DomainError("w must be non-negative")
    if w == 0.0:
        return 0.5
    if ap.is_gaussian:
        return 0.5 * erfc(w / 2.0)
    if ap.regime.value == "cauchy":
        return 0.5 - math.atan(w) / math.pi
    return float(get_survival(ap)(w)[0])


# ---------------------------------------------------------------------------
# increments
# ---------------------------------------------------------------------------

def sample_increment(alpha, d: int, t: float, rng: np.random.Generator,
                     size: int = 1) -> np.ndarray:
    """Draws of X_t in R^d: sqrt(2 S_t) * Z with Z standard normal."""
    ap = alpha_param(alpha)
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    z = rng.standard_normal(size=(size, d))
    if ap.is_gaussian:
        return math.sqrt(2.0 * t) * z
    s = subordinator.sample_many(ap, t, rng, size)
    return np.sqrt(2.0 * s)[:, None] * z


# ---------------------------------------------------------------------------
# two-sided envelope calibration
# ---------------------------------------------------------------------------

_envelope_cache: dict[tuple[float, int], tuple[float, float]] = {}


def envelope_band(alpha, d: int) -> tuple[float, float]:
    """Calibrated (lo, hi) of p_1(z) / min(1, z**(-d-alpha)) on a z grid.

    By scaling the same band applies to every t.  Cached per (alpha, d).
    """
    ap = alpha_param(alpha)
    if ap.is_gaussian:
        raise UnsupportedRegime("envelope comparison defined for alpha < 2")
    key = (round(ap.alpha, 12), d)
    if key in _envelope_cache:
        return _envelope_cache[key]
    z = np.exp(np.linspace(math.log(1e-3), math.log(40.0), 160))
    p = _unit_density_subordination(ap, d, z)
    env = np.minimum(1.0, z ** (-d - ap.alpha))
    ratios = p / env
    band = (float(ratios.min()), float(ratios.max()))
    _envelope_cache[key] = band
    return band
