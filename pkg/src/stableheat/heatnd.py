"""Heat content of domains in R^d by two independent routes.

Route 1 (quadrature): the escaped mass under the stable law is the expected
Gaussian escaped mass at the random time S_t, reduced by scaling to a single
integral against the unit-time subordinator density.

Route 2 (Monte Carlo): sample start points uniformly, add one exact stable
increment, count arrivals in the target region.

A closed-form arctan reduction for the Cauchy process on slab geometry
serves as an oracle for either engine.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats
from scipy.interpolate import CubicSpline
from scipy.special import gammaln

from . import asymptotics, geometry, kernel, subordinator
from .errors import BudgetTooSmall, DomainError
from .geometry import Ball, Box, Capsule, Domain, Slab
from .params import alpha_param
from .results import EstimateMethod, HeatContentEstimate
from .runtime import batch_rngs, parallel_map

_SQRT_PI = math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Gaussian (alpha = 2) heat content
# ---------------------------------------------------------------------------

def _phi(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / math.sqrt(2.0 * math.pi)


def _phi_bar(x):
    from scipy.special import erfc
    return 0.5 * erfc(np.asarray(x) / math.sqrt(2.0))


def _tail_area(m):
    """integral_0^m of the standard normal upper tail."""
    m = np.asarray(m, dtype=float)
    return m * _phi_bar(m) + _phi(0.0) - _phi(m)


def gaussian_interval_content(length: float, s) -> np.ndarray:
    """Escaped mass for an interval under the speed-2 Gaussian law."""
    s_arr = np.asarray(s, dtype=float)
    c = np.sqrt(2.0 * s_arr)
    return 2.0 * c * _tail_area(length / c)


def _ball_exit_prob(d: int, R: float, tau: float, r: np.ndarray) -> np.ndarray:
    """P(|x + G| > R) for |x| = r, G Gaussian with per-axis variance 2 tau."""
    scale = 2.0 * tau
    return stats.ncx2.sf(R * R / scale, d, r * r / scale)


def _ball_gauss_direct(d: int, R: float, tau: float) -> float:
    omega = geometry.sphere_area(d, 1.0)
    width = math.sqrt(2.0 * tau)
    if width < R / 8.0:
        u_max = min(R / width, 44.0)

        def layer(u):
            r = R - u * width
            return (r ** (d - 1)) * _ball_exit_prob(d, R, tau, np.asarray([r]))[0]

        val, _ = integrate.quad(layer, 0.0, u_max, limit=200)
        return omega * width * val

    def radial(r):
        return (r ** (d - 1)) * _ball_exit_prob(d, R, tau, np.asarray([r]))[0]

    val, _ = integrate.quad(radial, 0.0, R, limit=200)
    return omega * val


class _BallGaussTable:
    """ln-ln spline of the ball's Gaussian heat content in the time variable.

    Below the grid a self-calibrated  A sqrt(tau) + B tau  form is used (the
    relative truncation error is O(tau));  above it the volume is approached
    like |O| - |O|^2 (4 pi tau)^{-d/2}.
    """

    def __init__(self, d: int, R: float, n_grid: int = 600):
        self.d, self.R = d, R
        self.volume = geometry.ball_volume(d, R)
        self.tau_lo = 1e-6 * R * R
        self.tau_hi = 1e6 * R * R
        grid = np.geomspace(self.tau_lo, self.tau_hi, n_grid)
        vals = np.array([_ball_gauss_direct(d, R, float(tau)) for tau in grid])
        self._spline = CubicSpline(np.log(grid), np.log(vals))
        h1 = vals[0]
        h2 = _ball_gauss_direct(d, R, 4.0 * self.tau_lo)
        rt = math.sqrt(self.tau_lo)
        # solve A*rt + B*rt^2 = h1 ; A*2rt + B*4rt^2 = h2
        self.B = (h2 - 2.0 * h1) / (2.0 * self.tau_lo)
        self.A = (h1 - self.B * self.tau_lo) / rt

    def __call__(self, tau) -> np.ndarray:
        tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
        out = np.empty_like(tau_arr)
        lo = tau_arr < self.tau_lo
        hi = tau_arr > self.tau_hi
        mid = ~lo & ~hi
        out[lo] = self.A * np.sqrt(tau_arr[lo]) + self.B * tau_arr[lo]
        out[mid] = np.exp(self._spline(np.log(tau_arr[mid])))
        big = tau_arr[hi]
        out[hi] = self.volume - self.volume**2 * (4.0 * math.pi * big) ** (-self.d / 2.0)
        return out


_ball_tables: dict[tuple[int, float], _BallGaussTable] = {}
_ball_lock = threading.Lock()


def _get_ball_table(d: int, R: float) -> _BallGaussTable:
    key = (d, round(R, 12))
    with _ball_lock:
        tab = _ball_tables.get(key)
    if tab is None:
        tab = _BallGaussTable(d, R)
        with _ball_lock:
            _ball_tables[key] = tab
    return tab


def gaussian_heat_content(domain: Domain, s: float) -> float:
    """H for the speed-2 Gaussian law at time s, exact/quadrature routes."""
    if s <= 0.0:
        raise DomainError(f"time must be positive, got {s}")
    return float(_gaussian_heat_content_vec(domain, np.asarray([s]))[0])


def _gaussian_heat_content_vec(domain: Domain, s: np.ndarray) -> np.ndarray:
    s_arr = np.asarray(s, dtype=float)
    if isinstance(domain, Ball):
        return _get_ball_table(domain.dim, domain.radius)(s_arr)
    if isinstance(domain, Box):
        sides = domain.sides
        kept = np.ones_like(s_arr) * 1.0
        for L in sides:
            kept = kept * (L - gaussian_interval_content(float(L), s_arr))
        return float(np.prod(sides)) - kept
    raise DomainError(
        f"gaussian heat content needs a ball or box, got {domain.domain_id()}; "
        "use the Monte Carlo route for general shapes"
    )


def gaussian_heat_content_mc(domain: Domain, s: float, budget: int = 200_000,
                             seed: int = 0) -> HeatContentEstimate:
    """Monte Carlo Gaussian escaped mass for arbitrary shapes."""
    rng = np.random.default_rng(seed)
    pts = domain.sample_uniform(rng, budget)
    moved = pts + math.sqrt(2.0 * s) * rng.standard_normal(pts.shape)
    p = float(np.mean(~domain.contains(moved)))
    v = domain.volume
    return HeatContentEstimate(
        value=v * p, err=v * math.sqrt(max(p * (1 - p), 1e-30) / budget),
        t=s, method=EstimateMethod.DIRECT_MC,
    )


# ---------------------------------------------------------------------------
# stable heat content: subordination quadrature route
# ---------------------------------------------------------------------------

def heat_content_quadrature(alpha, domain: Domain, t: float) -> HeatContentEstimate:
    """Escaped mass via the expected Gaussian content at the random time."""
    ap = alpha_param(alpha)
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    if ap.is_gaussian:
        val = float(_gaussian_heat_content_vec(domain, np.asarray([t]))[0])
        return HeatContentEstimate(val, 1e-8 * val, t, EstimateMethod.SUBORDINATION_QUADRATURE)
    table = subordinator.get_table(ap)
    scale = t ** (2.0 / ap.alpha)
    h2 = _gaussian_heat_content_vec(domain, table.nodes * scale)
    vol = domain.volume
    val = float(table.weights @ h2) + vol * table.tail_mass
    # tail correction bound: the Gaussian content out there differs from the
    # volume by at most |O|^2 (4 pi tau)^{-d/2}
    tail_gap = vol**2 * (4.0 * math.pi * table.s_max * scale) ** (-domain.dim / 2.0)
    err = 1e-7 * val + min(tail_gap, vol * table.tail_mass)
    return HeatContentEstimate(val, err, t, EstimateMethod.SUBORDINATION_QUADRATURE)


def subordination_integrand(alpha, domain: Domain, t: float,
                            s_grid: np.ndarray):
    """(G(s, t), dominating envelope) on a grid; G integrates to H/t^(1/a)/surf."""
    ap = alpha_param(alpha)
    table = subordinator.get_table(ap)
    surf = domain.surface_area
    scale = t ** (2.0 / ap.alpha)
    s_arr = np.asarray(s_grid, dtype=float)
    dens = np.interp(s_arr, table.nodes, table.density_vals)
    h2 = _gaussian_heat_content_vec(domain, s_arr * scale)
    g_val = h2 / (t ** (1.0 / ap.alpha) * surf) * dens
    envelope = np.sqrt(s_arr) * dens / _SQRT_PI
    return g_val, envelope


# ---------------------------------------------------------------------------
# stable heat content: direct Monte Carlo route
# ---------------------------------------------------------------------------

def heat_content_mc(alpha, domain: Domain, t: float, budget: int = 1_000_000,
                    seed: int = 0, n_batches: int = 16,
                    threads: int | None = None,
                    target_err: float | None = None) -> HeatContentEstimate:
    """Escaped-mass estimate from one exact increment per start point.

    On slab geometry the counted event is arrival in the distinguished
    exterior layer rather than any exit.
    """
    ap = alpha_param(alpha)
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    vol = domain.volume
    rngs = batch_rngs(seed, n_batches)
    sizes = [budget // n_batches] * n_batches
    sizes[-1] += budget - sum(sizes)

    if target_err is not None:
        pilot = _mc_batch(ap, domain, t, min(50_000, budget), np.random.default_rng(seed ^ 0x9E3779B9))
        p_hat = max(pilot, 1e-12)
        needed = p_hat * (1.0 - p_hat) * (vol / target_err) ** 2
        if needed > budget:
            raise BudgetTooSmall(
                f"target err {target_err:g} needs ~{needed:.3g} samples; "
                f"budget is {budget}"
            )

    hits = parallel_map(
        lambda job: _mc_batch(ap, domain, t, job[0], job[1]) * job[0],
        list(zip(sizes, rngs)),
        threads,
    )
    p = float(sum(hits) / budget)
    err = vol * math.sqrt(max(p * (1.0 - p), 1e-30) / budget)
    return HeatContentEstimate(vol * p, err, t, EstimateMethod.DIRECT_MC)


def _mc_batch(ap, domain: Domain, t: float, size: int,
              rng: np.random.Generator) -> float:
    if size == 0:
        return 0.0
    hits = 0
    chunk = 250_000
    done = 0
    while done < size:
        m = min(chunk, size - done)
        pts = domain.sample_uniform(rng, m)
        moved = pts + kernel.sample_increment(ap, domain.dim, t, rng, m)
        if isinstance(domain, Slab):
            hits += int(np.count_nonzero(domain.in_target_layer(moved)))
        else:
            hits += int(np.count_nonzero(~domain.contains(moved)))
        done += m
    return hits / size


def transfer_mc(alpha, sample_source, source_volume: float, target_predicate,
                dim: int, t: float, budget: int = 500_000,
                seed: int = 0) -> HeatContentEstimate:
    """Monte Carlo mass transported from an arbitrary source to a target set.

    ``sample_source(rng, n)`` draws uniform points of the source region of
    the given volume; ``target_predicate(points)`` marks arrivals.
    """
    ap = alpha_param(alpha)
    rng = np.random.default_rng(seed)
    pts = sample_source(rng, budget)
    moved = pts + kernel.sample_increment(ap, dim, t, rng, budget)
    p = float(np.mean(target_predicate(moved)))
    err = source_volume * math.sqrt(max(p * (1.0 - p), 1e-30) / budget)
    return HeatContentEstimate(source_volume * p, err, t, EstimateMethod.DIRECT_MC)


# ---------------------------------------------------------------------------
# slab closed form (Cauchy) and its Gaussian building block
# ---------------------------------------------------------------------------

def cauchy_slab_content(delta: float, eps: float, t: float,
                        window_area: float = 1.0) -> float:
    """Exact mass moved from window x (0, delta) into the layer (-eps, 0).

    The transverse marginal of the Cauchy kernel integrates exactly to a
    one-dimensional arctan difference, making this closed form an oracle for
    the Monte Carlo and subordination engines on slab geometry.
    """
    if min(delta, eps, t) <= 0.0 or window_area <= 0.0:
        raise DomainError("slab parameters and t must be positive")

    def anti(x):
        # integral of arctan(u/t) du from 0 to x
        return x * math.atan(x / t) - 0.5 * t * math.log(t * t + x * x)

    val = anti(delta + eps) - anti(eps) - anti(delta) + anti(0.0)
    return window_area * val / math.pi


def gaussian_slab_layer_content(slab: Slab, s: float) -> float:
    """Gaussian analogue of the slab oracle (mass into the eps layer)."""
    c = math.sqrt(2.0 * s)
    delta, eps = slab.delta, slab.eps

    def g(m):
        return float(_tail_area(np.asarray([m]))[0])

    val = c * (g(delta / c) - g((delta + eps) / c) + g(eps / c))
    return slab.window_area * val


def slab_content_quadrature(alpha, slab: Slab, t: float) -> HeatContentEstimate:
    """Subordination route for the slab layer functional."""
    ap = alpha_param(alpha)
    if ap.is_gaussian:
        val = gaussian_slab_layer_content(slab, t)
        return HeatContentEstimate(val, 1e-9 * val, t, EstimateMethod.SUBORDINATION_QUADRATURE)
    table = subordinator.get_table(ap)
    scale = t ** (2.0 / ap.alpha)
    h2 = np.array([gaussian_slab_layer_content(slab, float(sv * scale))
                   for sv in table.nodes])
    val = float(table.weights @ h2)  # layer content vanishes at infinite time
    return HeatContentEstimate(val, 1e-7 * val + 1e-300, t,
                               EstimateMethod.SUBORDINATION_QUADRATURE)


# ---------------------------------------------------------------------------
# dispatch and fits
# ---------------------------------------------------------------------------

def heat_content(alpha, domain: Domain, t: float, method: str = "auto",
                 budget: int = 1_000_000, seed: int = 0,
                 n_batches: int = 16,
                 threads: int | None = None) -> HeatContentEstimate:
    """Heat content by the requested route.

    method: 'quadrature', 'mc', 'slab_closed_form' (Cauchy slab only), or
    'auto' (quadrature for balls/boxes, MC otherwise).
    """
    ap = alpha_param(alpha)
    if method == "auto":
        method = "quadrature" if isinstance(domain, (Ball, Box)) and not isinstance(domain, Slab) else "mc"
    if method == "quadrature":
        if isinstance(domain, Slab):
            return slab_content_quadrature(ap, domain, t)
        return heat_content_quadrature(ap, domain, t)
    if method == "mc":
        return heat_content_mc(ap, domain, t, budget=budget, seed=seed,
                               n_batches=n_batches, threads=threads)
    if method == "slab_closed_form":
        if not isinstance(domain, Slab):
            raise DomainError("closed form requires slab geometry")
        if ap.regime.value != "cauchy":
            raise DomainError("slab closed form is for alpha == 1")
        val = cauchy_slab_content(domain.delta, domain.eps, t, domain.window_area)
        return HeatContentEstimate(val, 1e-14 * val, t,
                                   EstimateMethod.CAUCHY_SLAB_CLOSED_FORM)
    raise DomainError(f"unknown method {method!r}")


def isoperimetric_bound(alpha, domain: Domain, t: float) -> float:
    """Upper bound Gamma(1-1/alpha)/pi * surface * t**(1/alpha), 1 < a < 2."""
    ap = alpha_param(alpha)
    if not 1.0 < ap.alpha < 2.0:
        raise DomainError("bound applies to 1 < alpha < 2")
    surf = domain.surface_area
    return math.exp(gammaln(1.0 - 1.0 / ap.alpha)) / math.pi * surf * t ** (1.0 / ap.alpha)


def predicted_leading_coefficient(alpha, domain: Domain) -> float:
    """Predicted small-time leading coefficient for the domain's regime."""
    ap = alpha_param(alpha)
    surf = domain.surface_area
    a = ap.alpha
    if a == 2.0:
        return surf / _SQRT_PI
    if a > 1.0:
        return math.exp(gammaln(1.0 - 1.0 / a)) / math.pi * surf
    if a == 1.0:
        return surf / math.pi
    perim, _ = geometry.fractional_perimeter(
        domain, a,
        method="quadrature" if isinstance(domain, Ball) or domain.dim == 1 else "montecarlo",
    )
    return kernel.tail_limit_constant(ap, domain.dim).value * perim


def law_basis(alpha, law: str) -> list[asymptotics.BasisTerm]:
    ap = alpha_param(alpha)
    if law == "t_pow_inv_alpha":
        return [asymptotics.power_term(1.0 / ap.alpha), asymptotics.power_term(1.0)]
    if law == "t_log":
        return [asymptotics.tlog_term(1.0), asymptotics.power_term(1.0)]
    if law == "linear_t":
        return [asymptotics.power_term(1.0), asymptotics.power_term(2.0)]
    raise DomainError(f"unknown law {law!r}")


def asymptote_fit(alpha, domain: Domain, t_grid, law: str,
                  method: str = "auto", budget: int = 1_000_000,
                  seed: int = 0) -> asymptotics.ExpansionReport:
    """Fit the leading small-time coefficient and compare to the prediction."""
    ap = alpha_param(alpha)
    data = []
    for i, t in enumerate(np.sort(np.asarray(t_grid, dtype=float))):
        est = heat_content(ap, domain, float(t), method=method, budget=budget,
                           seed=seed + i)
        data.append((float(t), est.value, est.err))
    basis = law_basis(ap, law)
    if ap.is_gaussian and law == "t_pow_inv_alpha":
        basis = [asymptotics.power_term(0.5), asymptotics.power_term(1.0)]
    predicted = predicted_leading_coefficient(ap, domain)
    return asymptotics.fit_leading(data, basis, predicted=predicted, law=law)
