import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gamma as gamma_fn

from stableheat import subordinator as sub
from stableheat.errors import DomainError, MomentDiverges, UnsupportedRegime
from stableheat.params import AlphaParam, Regime, alpha_param

ALPHAS = [0.4, 0.7, 1.0, 1.2, 1.5, 1.8]


def test_regime_classification():
    assert AlphaParam(0.3).regime is Regime.SUB_CRITICAL
    assert AlphaParam(1.0).regime is Regime.CAUCHY
    assert AlphaParam(1.7).regime is Regime.SUPER_CRITICAL
    assert AlphaParam(2.0).regime is Regime.GAUSSIAN
    with pytest.raises(DomainError):
        AlphaParam(0.0)
    with pytest.raises(DomainError):
        AlphaParam(2.5)


@given(st.floats(min_value=1e-6, max_value=2.0, exclude_min=True))
def test_regime_is_pure_function_of_alpha(a):
    ap = alpha_param(a)
    if a == 2.0:
        assert ap.regime is Regime.GAUSSIAN
    elif a == 1.0:
        assert ap.regime is Regime.CAUCHY
    elif a > 1.0:
        assert ap.regime is Regime.SUPER_CRITICAL
    else:
        assert ap.regime is Regime.SUB_CRITICAL


def test_closed_form_value_alpha_one():
    # eta_1 at s=1 equals exp(-1/4) / (2 sqrt(pi))
    expected = math.exp(-0.25) / (2.0 * math.sqrt(math.pi))
    assert sub.density(1.0, 1.0, 1.0) == pytest.approx(expected, rel=1e-12)
    assert sub.density(1.0, 1.0, 1.0) == pytest.approx(0.21970, rel=1e-4)


def test_density_matches_closed_form_across_s():
    # quadrature representation against the alpha=1 closed form
    for s in [0.05, 0.3, 1.0, 4.0, 50.0]:
        quad_val, err = sub.density_quadrature(0.5, s)
        exact = 0.5 / math.sqrt(math.pi) * s ** -1.5 * math.exp(-0.25 / s)
        assert quad_val == pytest.approx(exact, rel=1e-9)


def test_density_errors():
    with pytest.raises(UnsupportedRegime):
        sub.density(2.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        sub.density(1.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        sub.density(1.0, 1.0, 0.0)


@pytest.mark.parametrize("alpha", [0.4, 1.0, 1.5, 1.8])
def test_density_normalization(alpha):
    table = sub.get_table(alpha)
    mass = table.weights.sum() + table.tail_mass
    assert mass == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
@pytest.mark.parametrize("t", [0.25, 1.0, 3.0])
def test_density_scaling(alpha, t):
    # eta_t(s) == t**(-2/a) eta_1(s t**(-2/a)) pointwise
    scale = t ** (2.0 / alpha)
    for s in [0.2, 1.0, 5.0]:
        lhs = sub.density(alpha, t, s * scale) * scale
        rhs = sub.density(alpha, 1.0, s)
        assert lhs == pytest.approx(rhs, rel=1e-8)


@pytest.mark.parametrize("alpha", ALPHAS[:-1] + [1.8])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0])
def test_laplace_transform_quadrature(alpha, lam):
    for t in (0.5, 1.0, 2.0):
        got = sub.laplace_quadrature(alpha, t, lam)
        want = math.exp(-t * lam ** (alpha / 2.0))
        assert got == pytest.approx(want, abs=1e-6, rel=1e-6)


def test_laplace_example_value():
    # integral of exp(-2 s) against the alpha=1.5 density
    assert sub.laplace_quadrature(1.5, 1.0, 2.0) == pytest.approx(
        math.exp(-(2.0 ** 0.75)), rel=1e-10
    )


def test_moment_formula():
    got = sub.moment(1.5, 0.5)
    assert got == pytest.approx(gamma_fn(1.0 / 3.0) / gamma_fn(0.5), rel=1e-12)
    assert got == pytest.approx(1.51144, rel=1e-5)
    assert sub.moment(0.77, 0.0) == 1.0
    assert sub.moment(2.0, 0.5) == 1.0  # deterministic convention


@pytest.mark.parametrize("alpha,power", [
    (0.4, 0.15), (0.7, 0.3), (1.2, 0.55), (1.5, 0.5), (1.8, 0.6), (1.5, -1.2),
])
def test_moment_quadrature_matches_gamma_ratio(alpha, power):
    assert sub.moment_quadrature(alpha, power) == pytest.approx(
        sub.moment(alpha, power), rel=1e-8
    )


def test_moment_divergence():
    with pytest.raises(MomentDiverges):
        sub.moment(1.2, 0.6)
    with pytest.raises(MomentDiverges):
        sub.moment_quadrature(1.2, 0.8)


def test_sampler_gaussian_convention():
    rng = np.random.default_rng(0)
    s = sub.sample(2.0, 0.3, rng)
    assert s.value == 0.3
    assert np.all(sub.sample_many(2.0, 0.3, rng, 100) == 0.3)


def test_sampler_empirical_laplace_alpha_one():
    rng = np.random.default_rng(42)
    draws = sub.sample_many(1.0, 1.0, rng, 1_000_000)
    vals = np.exp(-draws)
    se = vals.std() / math.sqrt(len(vals))
    assert abs(vals.mean() - math.exp(-1.0)) <= 3.0 * se


def test_sampler_empirical_moment():
    rng = np.random.default_rng(43)
    draws = sub.sample_many(1.5, 1.0, rng, 400_000)
    vals = np.sqrt(draws)
    se = vals.std() / math.sqrt(len(vals))
    assert abs(vals.mean() - 1.5114292) <= 3.0 * se


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
def test_sampler_ks_against_cdf(alpha):
    rng = np.random.default_rng(7)
    draws = np.sort(sub.sample_many(alpha, 1.0, rng, 100_000))
    cdf_vals = sub.cdf(alpha, draws)
    n = len(draws)
    ks = max(
        np.max(np.abs(cdf_vals - np.arange(1, n + 1) / n)),
        np.max(np.abs(cdf_vals - np.arange(n) / n)),
    )
    assert ks < 0.01


def test_exp_moment_closed_form_alpha_one():
    est, _ = sub.exp_moment(1.0, 1.0)
    assert est == pytest.approx(1.0 / math.sqrt(5.0), rel=1e-12)


def test_exp_moment_vanishes_large_kappa():
    est, _ = sub.exp_moment(1.0, 1e6)
    assert est < 1e-4


def test_exp_moment_table_route_matches_identity():
    # independent of the alpha=1 special case: integrate the table directly
    table = sub.get_table(1.0)
    for kappa in (0.5, 1.0, 3.0):
        f = np.exp(-kappa * kappa / table.nodes)
        got = table.expectation(f, f_at_inf=1.0)
        assert got == pytest.approx(1.0 / math.sqrt(4 * kappa**2 + 1), rel=1e-9)


@pytest.mark.parametrize("alpha,kappa", [(0.5, 2.0), (1.2, 1.0), (1.8, 0.5)])
def test_exp_moment_below_bound(alpha, kappa):
    est, bound = sub.exp_moment_bound(alpha, kappa)
    assert 0.0 < est <= bound


def test_exp_moment_bound_errors():
    with pytest.raises(UnsupportedRegime):
        sub.exp_moment_bound(2.0, 1.0)
    with pytest.raises(DomainError):
        sub.exp_moment_bound(1.0, -1.0)


@pytest.mark.parametrize("alpha", [0.4, 1.0, 1.5])
def test_tail_envelope_on_fresh_grid(alpha):
    # calibrated on the table grid; must hold on a different log grid
    c0 = sub.tail_bound_constant(alpha)
    beta = alpha / 2.0
    s_grid = np.exp(np.linspace(math.log(0.037), math.log(8000.0), 60))
    dens, _ = sub.density_info(alpha, 1.0, s_grid)
    envelope = c0 * np.minimum(1.0, s_grid ** (-1.0 - beta))
    assert np.all(dens <= envelope * (1.0 + 1e-6))


def test_exp_moment_vec_matches_scalar():
    kappas = np.array([0.3, 1.0, 2.5])
    vec = sub.exp_moment_vec(1.5, kappas)
    for k, v in zip(kappas, vec):
        assert v == pytest.approx(sub.exp_moment(1.5, float(k))[0], rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(
    st.sampled_from([0.6, 1.0, 1.4]),
    st.floats(min_value=0.1, max_value=5.0),
)
def test_sample_scaling_law(alpha, t):
    # S_t equals t**(2/alpha) S_1 in law: compare empirical medians
    rng1 = np.random.default_rng(11)
    rng2 = np.random.default_rng(11)
    a = sub.sample_many(alpha, t, rng1, 2000)
    b = sub.sample_many(alpha, 1.0, rng2, 2000) * t ** (2.0 / alpha)
    assert np.median(a) == pytest.approx(np.median(b), rel=1e-12)
    assert np.all(a >= 0.0)
