import math

import numpy as np
import pytest

from stableheat import geometry as geo
from stableheat import heat1d, heatnd, kernel
from stableheat.errors import BudgetTooSmall, DomainError, GridTooNarrow

BALL = geo.Ball(center=(0.0, 0.0), radius=1.0)
BOX = geo.Box(lo=(0.0, 0.0), hi=(1.0, 2.0))
SLAB = geo.domain_from_shorthand("slab:2:1:1:1")


def test_gaussian_interval_matches_1d_oracle():
    iv = geo.Box(lo=(0.0,), hi=(1.0,))
    for s in (1e-4, 1e-2, 0.5):
        got = heatnd.gaussian_heat_content(iv, s)
        want = heat1d.heat_content_interval_exact(2.0, heat1d.Interval(0, 1), s)
        assert got == pytest.approx(want.value, rel=1e-9)


def test_gaussian_ball_small_time_limit():
    val = heatnd.gaussian_heat_content(BALL, 1e-8)
    limit = BALL.surface_area / math.sqrt(math.pi)
    assert val / math.sqrt(1e-8) == pytest.approx(limit, rel=1e-3)


def test_gaussian_ball_isoperimetric_style_bound():
    for s in (1e-4, 1e-2, 1.0, 100.0):
        val = heatnd.gaussian_heat_content(BALL, s)
        assert val <= BALL.surface_area * math.sqrt(s / math.pi) * (1 + 1e-9)
        assert val <= BALL.volume * (1 + 1e-9)


def test_gaussian_box_vs_mc():
    est = heatnd.gaussian_heat_content_mc(BOX, 0.01, budget=400_000, seed=2)
    exact = heatnd.gaussian_heat_content(BOX, 0.01)
    assert abs(est.value - exact) <= 3.0 * est.err


def test_gaussian_capsule_needs_mc():
    cap = geo.Capsule(p0=(-0.5, 0.0), p1=(0.5, 0.0), radius=0.6)
    with pytest.raises(DomainError):
        heatnd.gaussian_heat_content(cap, 0.01)
    est = heatnd.gaussian_heat_content_mc(cap, 0.01, budget=100_000, seed=3)
    assert 0.0 < est.value < cap.volume


def test_alpha_two_reduces_to_gaussian():
    for t in (1e-3, 0.1):
        a = heatnd.heat_content_quadrature(2.0, BALL, t)
        b = heatnd.gaussian_heat_content(BALL, t)
        assert a.value == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
@pytest.mark.parametrize("t", [1e-3, 1e-2])
def test_route_agreement_ball(alpha, t):
    q = heatnd.heat_content_quadrature(alpha, BALL, t)
    m = heatnd.heat_content_mc(alpha, BALL, t, budget=600_000, seed=17)
    assert q.agrees_with(m)


@pytest.mark.parametrize("alpha", [0.7, 1.5])
def test_route_agreement_box(alpha):
    t = 5e-3
    q = heatnd.heat_content_quadrature(alpha, BOX, t)
    m = heatnd.heat_content_mc(alpha, BOX, t, budget=600_000, seed=23)
    assert q.agrees_with(m)


def test_isoperimetric_bound_along_grid():
    for t in np.geomspace(1e-5, 1e-1, 9):
        q = heatnd.heat_content_quadrature(1.5, BALL, float(t))
        assert q.value <= heatnd.isoperimetric_bound(1.5, BALL, float(t)) * (1 + 1e-9)


def test_subordination_integrand_dominated():
    s_grid = np.geomspace(1e-2, 1e4, 40)
    for t in (1e-3, 1e-1):
        g_val, envelope = heatnd.subordination_integrand(1.5, BALL, t, s_grid)
        assert np.all(g_val >= -1e-15)
        assert np.all(g_val <= envelope * (1.0 + 1e-9))


def test_slab_closed_form_properties():
    v = heatnd.cauchy_slab_content(1.0, 1.0, 0.01, 1.0)
    lead = 0.01 * math.log(100.0) / math.pi
    assert v == pytest.approx(lead, rel=0.25)  # O(t) correction present
    # symmetry in (delta, eps)
    assert heatnd.cauchy_slab_content(0.7, 0.3, 0.01, 2.0) == pytest.approx(
        heatnd.cauchy_slab_content(0.3, 0.7, 0.01, 2.0), rel=1e-14
    )
    # decay at large t
    assert heatnd.cauchy_slab_content(1.0, 1.0, 1e6, 1.0) < 1e-5
    with pytest.raises(DomainError):
        heatnd.cauchy_slab_content(1.0, -1.0, 0.01, 1.0)


def test_slab_subordination_equals_closed_form():
    for t in (1e-3, 1e-2, 0.1):
        sq = heatnd.slab_content_quadrature(1.0, SLAB, t)
        cf = heatnd.cauchy_slab_content(SLAB.delta, SLAB.eps, t, SLAB.window_area)
        assert sq.value == pytest.approx(cf, rel=1e-10)


@pytest.mark.parametrize("t", [1e-3, 1e-2])
def test_slab_engine_matches_oracle(t):
    mc = heatnd.heat_content_mc(1.0, SLAB, t, budget=2_000_000, seed=5)
    cf = heatnd.cauchy_slab_content(SLAB.delta, SLAB.eps, t, SLAB.window_area)
    assert abs(mc.value - cf) <= 3.0 * mc.err


def test_heat_content_dispatch():
    est = heatnd.heat_content(1.0, SLAB, 1e-2, method="slab_closed_form")
    assert est.method.value == "cauchy_slab_closed_form"
    with pytest.raises(DomainError):
        heatnd.heat_content(1.5, SLAB, 1e-2, method="slab_closed_form")
    with pytest.raises(DomainError):
        heatnd.heat_content(1.0, BALL, 1e-2, method="slab_closed_form")
    with pytest.raises(DomainError):
        heatnd.heat_content(1.0, BALL, 1e-2, method="warp")
    auto = heatnd.heat_content(1.5, BALL, 1e-2, method="auto")
    assert auto.method.value == "subordination_quadrature"


def test_additivity_decomposition():
    # escaped mass splits exactly across collar source/target pieces
    alpha, t, eps, delta = 1.2, 1e-2, 0.25, 0.25
    rng_vol = np.random.default_rng(0)

    def sd(pts):
        return BALL.signed_distance(pts)

    def sample_region(pred, n, rng):
        out = np.empty((n, 2))
        filled = 0
        while filled < n:
            cand = BALL.sample_uniform(rng, 2 * (n - filled) + 64)
            keep = cand[pred(cand)]
            take = min(len(keep), n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out

    core_pred = lambda p: sd(p) >= eps
    collar_pred = lambda p: (sd(p) > 0) & (sd(p) < eps)
    vol_core = math.pi * (1 - eps) ** 2
    vol_collar = math.pi - vol_core

    out_pred = lambda p: sd(p) <= 0
    ring_pred = lambda p: (sd(p) < 0) & (sd(p) > -delta)
    far_pred = lambda p: sd(p) <= -delta

    total = heatnd.heat_content_mc(alpha, BALL, t, budget=800_000, seed=31)
    a = heatnd.transfer_mc(alpha, lambda r, n: sample_region(core_pred, n, r),
                           vol_core, out_pred, 2, t, budget=400_000, seed=32)
    b = heatnd.transfer_mc(alpha, lambda r, n: sample_region(collar_pred, n, r),
                           vol_collar, ring_pred, 2, t, budget=400_000, seed=33)
    c = heatnd.transfer_mc(alpha, lambda r, n: sample_region(collar_pred, n, r),
                           vol_collar, far_pred, 2, t, budget=400_000, seed=34)
    combined = a.value + b.value + c.value
    sigma = math.sqrt(total.err**2 + a.err**2 + b.err**2 + c.err**2)
    assert abs(total.value - combined) <= 3.0 * sigma


def test_asymptote_fit_cauchy_ball():
    rep = heatnd.asymptote_fit(
        1.0, BALL, np.geomspace(1e-5, 1e-2, 8), "t_log", method="quadrature"
    )
    assert rep.predicted_coefficient == pytest.approx(2.0, rel=1e-12)
    assert rep.relative_gap < 0.10


def test_asymptote_fit_gaussian_ball():
    rep = heatnd.asymptote_fit(
        2.0, BALL, np.geomspace(1e-6, 1e-3, 8), "t_pow_inv_alpha",
        method="quadrature",
    )
    want = BALL.surface_area / math.sqrt(math.pi)
    assert rep.predicted_coefficient == pytest.approx(want, rel=1e-12)
    assert rep.relative_gap < 0.02


def test_linear_law_interval_consistent_with_expansion():
    # the tail-constant times the fractional perimeter reproduces the
    # one-dimensional polynomial coefficient exactly
    iv = geo.Box(lo=(0.0,), hi=(1.0,))
    alpha = 0.5
    pred = heatnd.predicted_leading_coefficient(alpha, iv)
    exp1d = heat1d.expansion_terms(alpha, heat1d.Interval(0.0, 1.0))
    assert pred == pytest.approx(exp1d.terms[0].coefficient, rel=1e-8)


def test_fit_grid_too_narrow():
    with pytest.raises(GridTooNarrow):
        heatnd.asymptote_fit(1.0, BALL, [1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3],
                             "t_log", method="quadrature")


def test_mc_determinism_and_budget_guard():
    a = heatnd.heat_content_mc(1.5, BALL, 1e-2, budget=100_000, seed=77)
    b = heatnd.heat_content_mc(1.5, BALL, 1e-2, budget=100_000, seed=77)
    assert a.value == b.value
    c = heatnd.heat_content_mc(1.5, BALL, 1e-2, budget=100_000, seed=78)
    assert c.value != a.value
    with pytest.raises(BudgetTooSmall):
        heatnd.heat_content_mc(1.5, BALL, 1e-2, budget=10_000, seed=1,
                               target_err=1e-7)


def test_mc_threads_identical():
    a = heatnd.heat_content_mc(1.2, BALL, 1e-2, budget=200_000, seed=9,
                               n_batches=8, threads=1)
    b = heatnd.heat_content_mc(1.2, BALL, 1e-2, budget=200_000, seed=9,
                               n_batches=8, threads=4)
    assert a.value == b.value
