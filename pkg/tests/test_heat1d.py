import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from stableheat import heat1d
from stableheat.errors import DomainError, RangeError
from stableheat.heat1d import Interval

UNIT = Interval(0.0, 1.0)


def test_interval_validation():
    assert Interval(-1.0, 2.5).length == 3.5
    with pytest.raises(DomainError):
        Interval(1.0, 1.0)
    with pytest.raises(DomainError):
        Interval(0.0, math.inf)


def test_cauchy_formula_equals_quadrature_everywhere():
    # the closed formula holds for ALL t, not just small t
    for t in np.geomspace(1e-6, 1.0, 9):
        exact = heat1d.cauchy_closed_form(UNIT, float(t))
        quad = heat1d.heat_content_interval_exact(1.0, UNIT, float(t))
        assert quad.value == pytest.approx(exact, rel=1e-10)


def test_cauchy_value_frozen():
    # (2/pi)(t ln(1/t) + arctan(t) + (t/2) ln(t^2+1)) at t = 0.1
    assert heat1d.cauchy_closed_form(UNIT, 0.1) == pytest.approx(
        0.2103548835051290, rel=1e-12
    )
    assert heat1d.heat_content_interval_exact(1.0, UNIT, 0.1).value == pytest.approx(
        0.2103548835051290, rel=1e-10
    )


def test_gaussian_small_time_coefficient():
    for t in (1e-6, 1e-8):
        est = heat1d.heat_content_interval_exact(2.0, UNIT, t)
        assert est.value / math.sqrt(t) == pytest.approx(
            2.0 / math.sqrt(math.pi), rel=1e-9
        )


def test_heat_content_bounded_and_vanishing():
    for alpha in (0.5, 1.0, 1.7, 2.0):
        tiny = heat1d.heat_content_interval_exact(alpha, UNIT, 1e-8)
        assert 0.0 <= tiny.value <= UNIT.length
        assert tiny.value < 1e-2
        big = heat1d.heat_content_interval_exact(alpha, UNIT, 5.0)
        assert big.value <= UNIT.length * (1.0 + 1e-12)


def test_heat_content_errors():
    with pytest.raises(DomainError):
        heat1d.heat_content_interval_exact(1.0, UNIT, 0.0)


def test_supercritical_leading_coefficient():
    exp = heat1d.expansion_terms(1.5, UNIT)
    assert exp.leading.coefficient == pytest.approx(
        (2.0 / math.pi) * math.gamma(1.0 - 1.0 / 1.5), rel=1e-12
    )
    assert exp.leading.coefficient == pytest.approx(1.7054652, rel=1e-6)
    assert exp.leading.power == pytest.approx(2.0 / 3.0)
    assert exp.remainder_power == 1.0


def test_gaussian_expansion_remainder_order():
    exp = heat1d.expansion_terms(2.0, UNIT)
    assert exp.remainder_power == 1.5
    assert exp.leading.coefficient == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-12)


def test_subcritical_polynomial_coefficient():
    exp = heat1d.expansion_terms(0.4, UNIT)
    c1 = (2.0 / math.pi) * math.gamma(0.4) * math.sin(0.2 * math.pi) / 0.6
    assert exp.terms[0].coefficient == pytest.approx(c1, rel=1e-12)
    assert exp.terms[0].coefficient == pytest.approx(1.38338, rel=1e-4)
    powers = [t.power for t in exp.terms]
    assert powers == [1.0, 2.0, 2.5]
    assert exp.remainder_power == 3.0
    assert exp.t_max == pytest.approx(math.exp(-1.0))


def test_resonant_coefficient_alpha_half():
    exp = heat1d.expansion_terms(0.5, UNIT)
    logterm = [t for t in exp.terms if t.with_log]
    assert len(logterm) == 1
    assert logterm[0].power == 2.0
    assert logterm[0].coefficient == pytest.approx(-2.0 / math.pi, rel=1e-12)
    assert exp.remainder_power == 3.0


def test_length_dependence_of_coefficients():
    om = Interval(0.0, 2.0)
    exp = heat1d.expansion_terms(0.4, om)
    c1 = (2.0 / math.pi) * math.gamma(0.4) * math.sin(0.2 * math.pi) / 0.6
    assert exp.terms[0].coefficient == pytest.approx(c1 * 2.0 ** 0.6, rel=1e-12)


@pytest.mark.parametrize("alpha,lo,hi,minslope", [
    (2.0, 1e-4, 1e-2, 1.4),
    (1.5, 1e-5, 1e-3, 0.9),
    (1.2, 1e-5, 1e-3, 0.9),
    (0.5, 3e-3, 3e-2, 2.9),
    (0.4, 3e-3, 3e-2, 2.9),
])
def test_remainder_slopes(alpha, lo, hi, minslope):
    rep = heat1d.remainder_check(alpha, UNIT, np.geomspace(lo, hi, 8))
    assert rep.fitted_slope >= minslope
    assert rep.passes


def test_remainder_range_error():
    with pytest.raises(RangeError):
        heat1d.remainder_check(0.4, UNIT, [1e-3, 0.5])
    with pytest.raises(RangeError):
        heat1d.remainder_check(0.4, UNIT, [-1e-3, 1e-2])


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0])
def test_positive_part_mean_identity(alpha):
    got = heat1d.positive_part_mean(alpha)
    want = math.gamma(1.0 - 1.0 / alpha) / math.pi
    assert got == pytest.approx(want, rel=1e-6)


def test_positive_part_mean_diverges_at_cauchy():
    with pytest.raises(DomainError):
        heat1d.positive_part_mean(1.0)


def test_subcritical_coefficients_recovered_from_quadrature():
    # extract c_1, c_2 by fitting the oracle, compare to closed forms (2%)
    from stableheat import asymptotics
    exp = heat1d.expansion_terms(0.4, UNIT)
    data = []
    for t in np.geomspace(1e-5, 1e-2, 10):
        est = heat1d.heat_content_interval_exact(0.4, UNIT, float(t))
        data.append((float(t), est.value, est.err))
    basis = [asymptotics.power_term(p) for p in (1.0, 2.0, 2.5, 3.0)]
    rep = asymptotics.fit_leading(data, basis)
    assert rep.all_coefficients[0] == pytest.approx(exp.terms[0].coefficient, rel=0.02)
    assert rep.all_coefficients[1] == pytest.approx(exp.terms[1].coefficient, rel=0.02)


def test_constant_term_consistency_alpha_inverse_integer():
    # with c_N computed, the prefix must track the oracle to O(t^(N+1))
    exp = heat1d.expansion_terms(0.5, UNIT)
    for t in (1e-3, 3e-3):
        est = heat1d.heat_content_interval_exact(0.5, UNIT, t)
        resid = abs(est.value - float(exp.prefix(t)))
        assert resid <= 5.0 * t ** 3


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from([0.6, 1.0, 1.5, 2.0]),
    st.floats(min_value=-3.0, max_value=0.0),
)
def test_positivity_and_volume_bound(alpha, log10_t):
    t = 10.0 ** log10_t
    est = heat1d.heat_content_interval_exact(alpha, UNIT, t)
    assert 0.0 <= est.value <= UNIT.length * (1.0 + 1e-12)


def test_survival_integral_brute_force_cross_check():
    # independent nested quadrature of the two-sided tail at alpha = 1
    def tail(w):
        return 0.5 - math.atan(w) / math.pi

    brute, _ = integrate.quad(tail, 0.0, 20.0, limit=200)
    mine, _ = heat1d.survival_integral(1.0, 20.0)
    assert mine == pytest.approx(brute, rel=1e-10)
