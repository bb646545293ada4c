import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import levy_stable

from stableheat import kernel
from stableheat.errors import DomainError, UnsupportedRegime
from stableheat.kernel import KernelMethod


def test_cauchy_normalisation_at_origin():
    kv = kernel.kernel_eval(1.0, 1, 1.0, 0.0)
    assert kv.value == pytest.approx(1.0 / math.pi, rel=1e-14)
    assert kv.method is KernelMethod.CLOSED_FORM_CAUCHY


def test_gaussian_at_origin_d2():
    kv = kernel.kernel_eval(2.0, 2, 1.0, 0.0)
    assert kv.value == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-14)
    assert kv.method is KernelMethod.CLOSED_FORM_GAUSSIAN


def test_kernel_eval_errors():
    with pytest.raises(DomainError):
        kernel.kernel_eval(1.5, 1, 0.0, 1.0)
    with pytest.raises(DomainError):
        kernel.kernel_eval(1.5, 1, 1.0, -1.0)


def test_tail_constant_cauchy_1d():
    # closed form reduces to 1/pi at (alpha, d) = (1, 1)
    assert kernel.tail_limit_constant(1.0, 1).value == pytest.approx(
        1.0 / math.pi, rel=1e-12
    )


def test_tail_constant_vanishes_at_gaussian_limit():
    assert kernel.tail_limit_constant(1.999999, 2).value < 1e-5
    with pytest.raises(UnsupportedRegime):
        kernel.tail_limit_constant(2.0, 2)


def test_tail_limit_agrees_with_exact_cauchy_kernel():
    # adjudicated numerically: the exact kernel gives p_t(r)/t -> k_1/(r^2),
    # and the constant formula gives the same number since d + alpha = 2
    r = 2.0
    limit = kernel.kernel_tail_limit(1.0, 1, r)
    brute = kernel.cauchy_kernel(1, 1e-9, r) / 1e-9
    assert limit == pytest.approx((1.0 / math.pi) / 4.0, rel=1e-12)
    assert brute == pytest.approx(limit, rel=1e-10)


@pytest.mark.parametrize("alpha,d", [(0.6, 1), (1.5, 1), (0.6, 2), (1.2, 3)])
def test_tail_limit_check_monotone(alpha, d):
    rels = kernel.tail_limit_check(alpha, d, 2.5)
    assert rels[0] > rels[1] > rels[2]


@pytest.mark.parametrize("alpha", [0.5, 0.8, 1.2, 1.5, 1.8])
def test_subordination_matches_reference_pdf(alpha):
    for z in (0.0, 0.5, 2.0, 8.0):
        mine = kernel.unit_kernel(alpha, 1, z)
        ref = levy_stable.pdf(z, alpha, 0)
        assert mine == pytest.approx(ref, rel=1e-9)


def test_kernel_at_origin_moment_identity():
    # p_1(0) in R^d equals (4 pi)^(-d/2) E[S_1^(-d/2)]
    from stableheat import subordinator
    for alpha, d in [(0.7, 1), (1.5, 2), (1.2, 3)]:
        expected = (4.0 * math.pi) ** (-d / 2.0) * subordinator.moment(alpha, -d / 2.0)
        assert kernel.unit_kernel(alpha, d, 0.0) == pytest.approx(expected, rel=1e-9)


def test_sato_coefficient_value():
    coeffs = kernel.sato_coefficients(0.5, 3)
    a1 = math.gamma(1.5) * math.sin(math.pi / 4.0) / math.pi
    assert coeffs.a[0] == pytest.approx(a1, rel=1e-12)
    assert coeffs.a[0] == pytest.approx(0.19947, rel=1e-4)
    # magnitude bound |a_n| <= Gamma(n a + 1)/n!
    for n in (1, 2, 3):
        bound = math.gamma(n * 0.5 + 1.0) / math.factorial(n)
        assert abs(coeffs.a[n - 1]) <= bound * (1 + 1e-12)


def test_sato_root_test_decay():
    from scipy.special import gammaln

    n_max = 120
    n = np.arange(1, n_max + 1, dtype=float)
    coeffs = kernel.sato_coefficients(0.6, n_max).a
    vals = (np.abs(coeffs) / n) ** (1.0 / n)
    # the bound sequence (Gamma(n a + 1)/(n n!))^(1/n) decreases beyond a
    # small prefix and drags the coefficient sequence to zero with it
    bound = np.exp((gammaln(n * 0.6 + 1.0) - gammaln(n + 1.0) - np.log(n)) / n)
    assert np.all(np.diff(bound[5:]) < 0)
    assert np.all(vals <= bound + 1e-12)
    assert bound[-1] < 0.5 * bound[9]


@pytest.mark.parametrize("alpha", [0.4, 0.7])
@pytest.mark.parametrize("z", [3.5, 10.0, 30.0])
def test_series_agrees_with_quadrature_within_remainder(alpha, z):
    val, bound, _ = kernel.sato_density(alpha, z)
    ref = kernel.unit_kernel(alpha, 1, z)
    assert abs(val - ref) <= bound + 1e-11 * ref


def test_series_refused_near_origin():
    assert kernel.sato_density(0.5, 0.8) is None


def test_kernel_eval_series_dispatch():
    kv = kernel.kernel_eval(0.5, 1, 1.0, 10.0)
    assert kv.method is KernelMethod.SATO_SERIES
    kv2 = kernel.kernel_eval(0.5, 1, 1.0, 0.5)
    assert kv2.method is KernelMethod.SUBORDINATION_QUADRATURE
    assert kv.value == pytest.approx(levy_stable.pdf(10.0, 0.5, 0), rel=1e-9)


@pytest.mark.parametrize("alpha,d", [(0.5, 1), (1.5, 2), (0.8, 3)])
def test_normalization(alpha, d):
    assert kernel.normalization_check(alpha, d) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("alpha,d", [(0.7, 1), (1.5, 2)])
def test_scaling_relation(alpha, d):
    for t in (0.1, 2.0):
        for r in (0.3, 1.0, 4.0):
            lhs = kernel.kernel_eval(alpha, d, t, r).value
            rhs = t ** (-d / alpha) * kernel.kernel_eval(
                alpha, d, 1.0, r * t ** (-1.0 / alpha)
            ).value
            assert lhs == pytest.approx(rhs, rel=1e-7)


@pytest.mark.parametrize("alpha,d", [(0.6, 1), (1.4, 2)])
def test_radial_monotonicity(alpha, d):
    rs = np.linspace(0.0, 6.0, 25)
    vals = [kernel.kernel_eval(alpha, d, 1.0, float(r)).value for r in rs]
    assert np.all(np.diff(vals) <= 1e-14)


@pytest.mark.parametrize("alpha,d", [(0.5, 1), (1.5, 2)])
def test_envelope_band_stable_across_grids(alpha, d):
    lo, hi = kernel.envelope_band(alpha, d)
    assert 0.0 < lo < hi
    z = np.exp(np.linspace(math.log(2e-3), math.log(35.0), 97))
    p = np.array([kernel.unit_kernel(alpha, d, float(zz)) for zz in z])
    ratio = p / np.minimum(1.0, z ** (-d - alpha))
    assert ratio.min() >= lo * 0.9
    assert ratio.max() <= hi * 1.1


def test_survival_against_reference():
    for alpha in (0.5, 1.2, 1.8):
        for w in (0.2, 2.0, 30.0):
            assert kernel.survival(alpha, w) == pytest.approx(
                levy_stable.sf(w, alpha, 0), rel=1e-7, abs=1e-12
            )
    assert kernel.survival(1.0, 1.0) == pytest.approx(0.25, rel=1e-14)
    assert kernel.survival(2.0, 0.0) == 0.5


def test_survival_series_tail_beyond_reference_underflow():
    # power tails survive where the reference implementation underflows
    val = kernel.survival(1.5, 500.0)
    lead = kernel.tail_limit_constant(1.5, 1).value / 1.5 * 500.0 ** -1.5
    assert val == pytest.approx(lead, rel=0.01)


def test_increment_gaussian_variance():
    rng = np.random.default_rng(5)
    x = kernel.sample_increment(2.0, 1, 1.0, rng, 200_000)[:, 0]
    se = (x**2).std() / math.sqrt(len(x))
    assert abs((x**2).mean() - 2.0) <= 3.0 * se


def test_increment_cauchy_tail_probability():
    rng = np.random.default_rng(6)
    x = kernel.sample_increment(1.0, 1, 1.0, rng, 400_000)[:, 0]
    p = (x >= 1.0).mean()
    se = math.sqrt(p * (1 - p) / len(x))
    assert abs(p - 0.25) <= 3.0 * se


def test_increment_characteristic_function():
    rng = np.random.default_rng(7)
    x = kernel.sample_increment(1.5, 1, 1.0, rng, 400_000)[:, 0]
    vals = np.cos(x)
    se = vals.std() / math.sqrt(len(x))
    assert abs(vals.mean() - math.exp(-1.0)) <= 3.0 * se


def test_increment_shape_and_time_scaling():
    rng = np.random.default_rng(8)
    x = kernel.sample_increment(0.7, 3, 0.5, rng, 1000)
    assert x.shape == (1000, 3)
    with pytest.raises(DomainError):
        kernel.sample_increment(0.7, 3, 0.0, rng, 10)
