import math

import mpmath
import numpy as np
from scipy.special import ndtr
import pytest
from hypothesis import given
from hypothesis import strategies as st

from renewal_count.distributions import (
    BurrXII,
    Exponential,
    Gamma,
    GenGamma,
    ParameterError,
    SpecParseError,
    Weibull,
    batch_tails,
    cdf,
    discretize,
    parse_distribution,
    survival,
)

ALL = [
    Exponential(1.3),
    Weibull(1.0, 0.6),
    Weibull(2.38, 1.12),
    Gamma(0.7, 2.0),
    Gamma(3.5, 1.0),
    GenGamma(0.3, 0.8, 0.5),
    GenGamma(-0.45, 0.66, 2.3),
    GenGamma(0.2, 0.9, -0.7),
    GenGamma(0.0, 1.0, 0.0),
    BurrXII(2.0, 1.5, 0.7),
]


def test_survival_examples():
    assert survival(Weibull(1, 2), 1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert survival(BurrXII(1, 1, 1), 1.0) == pytest.approx(0.5, rel=1e-15)
    # q = 1 is the exponential on the log-time scale: gamma branch with g = 1, u = t
    assert survival(GenGamma(0, 1, 1), 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    for spec in ALL:
        assert survival(spec, 0.0) == 1.0
        assert cdf(spec, 0.0) == 0.0


def test_cdf_examples():
    assert cdf(Weibull(1, 1), 0.0) == 0.0
    assert cdf(Weibull(1, 1), math.log(2)) == pytest.approx(0.5, rel=1e-15)
    b = BurrXII(2, 1.5, 0.7)
    direct = 1.0 - (1.0 + (2 * 0.8) ** 1.5) ** -0.7
    assert cdf(b, 0.8) == pytest.approx(direct, rel=1e-14)


def test_gengamma_special_cases():
    t = np.linspace(0.05, 4, 40)
    # q = 1: Weibull with beta = 1/sigma, alpha = exp(-mu)
    np.testing.assert_allclose(
        GenGamma(0.4, 0.7, 1.0).survival(t), Weibull(math.exp(-0.4), 1 / 0.7).survival(t), rtol=1e-12
    )
    # q = sigma: gamma with shape 1/q^2, rate exp(-mu) / q^2
    q = 0.6
    np.testing.assert_allclose(
        GenGamma(0.2, q, q).survival(t), Gamma(1 / q**2, math.exp(-0.2) / q**2).survival(t), rtol=1e-12
    )
    # q = 0: log-normal
    from scipy.stats import lognorm

    np.testing.assert_allclose(GenGamma(0.3, 0.8, 0.0).survival(t), lognorm.sf(t, 0.8, scale=math.exp(0.3)), rtol=1e-12)
    # q -> 0 from either side approaches the log-normal
    for qq in (1e-4, -1e-4):
        np.testing.assert_allclose(GenGamma(0.3, 0.8, qq).survival(t), lognorm.sf(t, 0.8, scale=math.exp(0.3)), atol=1e-3)


def test_gengamma_tiny_q():
    # frozen from a 40-digit quadrature of the gamma density with shape 1/q^2
    t = math.exp(-1.5)
    assert GenGamma(0.0, 1.0, 1e-6).cdf(t) == pytest.approx(0.066807293010530321, rel=1e-12)
    # the correction to the normal limit is linear in q
    z = np.linspace(-3, 3, 13)
    t = np.exp(z)
    gaps = [np.max(np.abs(GenGamma(0, 1, q).survival(t) - ndtr(-z))) / q for q in (1e-4, 1e-7, 1e-10)]
    np.testing.assert_allclose(gaps, gaps[0], rtol=1e-3)
    # shapes 1/q^2 beyond the float range fall back to the normal limit
    np.testing.assert_array_equal(GenGamma(0, 1, 1e-206).survival(t), ndtr(-z))
    s = GenGamma(0.0, 1.0, -0.25).survival(np.array([0.0, 4.4e-235]))
    np.testing.assert_array_equal(s, [1.0, 1.0])


def test_gengamma_negative_q_limits():
    g = GenGamma(0.2, 0.9, -0.7)
    assert g.survival(1e-8) == pytest.approx(1.0, abs=1e-6)
    assert g.survival(1e8) < 1e-6


def test_from_stacy():
    shape, scale, power = 2.0, 1.5, 1.3
    g = GenGamma.from_stacy(shape, scale, power)
    t = np.linspace(0.1, 5, 20)
    # Stacy: S = Q(shape, (t/scale)^power)
    from scipy.special import gammaincc

    np.testing.assert_allclose(g.survival(t), gammaincc(shape, (t / scale) ** power), rtol=1e-12)


def test_weibull_beta_one_is_exponential():
    rng = np.random.default_rng(0)
    t = rng.uniform(0, 5, 100)
    alpha = 1.7
    np.testing.assert_allclose(Weibull(alpha, 1.0).survival(t), Exponential(alpha).survival(t), rtol=1e-15, atol=0)


def test_burr_large_nu_is_weibull():
    beta, nu = 1.3, 1e6
    t = np.linspace(0.1, 3, 60)
    burr = BurrXII(nu ** (-1 / beta), beta, nu)
    np.testing.assert_allclose(burr.survival(t), Weibull(1.0, beta).survival(t), rtol=1e-4)


@pytest.mark.parametrize("spec", ALL, ids=str)
def test_tails_sum_to_one_and_monotone(spec):
    t = np.concatenate([[0.0], np.geomspace(1e-6, 20, 200)])
    f, s = spec.tails(t)
    assert np.all(f + s == 1.0)
    assert np.all(np.diff(s) <= 0)
    assert np.all((s >= 0) & (s <= 1))


@pytest.mark.parametrize("spec", ALL, ids=str)
def test_batch_tails_match(spec):
    names = list(spec.params())
    params = {k: np.array([v, v]) for k, v in spec.params().items()}
    t = np.linspace(0, 3, 13)
    lo, up = batch_tails(type(spec), params, t)
    np.testing.assert_array_equal(up[0], spec.survival(t))
    np.testing.assert_array_equal(lo[1], spec.cdf(t))
    assert names


@pytest.mark.parametrize(
    "bad",
    [lambda: Weibull(0, 1), lambda: Weibull(1, -1), lambda: Gamma(1, 0), lambda: BurrXII(1, 1, 0),
     lambda: GenGamma(0, 0, 1), lambda: Exponential(float("nan")), lambda: GenGamma(float("inf"), 1, 1)],
)
def test_parameter_errors(bad):
    with pytest.raises(ParameterError):
        bad()


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        survival(Weibull(1, 1), -0.1)


def test_discretize_examples():
    g = discretize(Exponential(1.0), 1.0, 1)
    assert g.increments[0] == pytest.approx(1 - math.exp(-1), rel=1e-15)
    assert g.h == 1.0 and g.horizon == 1.0
    for spec in ALL:
        for n in (1, 7, 50):
            g = discretize(spec, 2.5, n)
            assert np.all(g.increments >= 0)
            assert g.increments.sum() == pytest.approx(spec.cdf(2.5), abs=1e-12)
            assert g.n_steps * g.h == pytest.approx(2.5, rel=1e-15)
    with pytest.raises(ValueError):
        discretize(Exponential(1), 1.0, 0)
    with pytest.raises(ValueError):
        discretize(Exponential(1), 0.0, 4)


def test_discretize_extended_precision():
    mpmath.mp.dps = 40
    g = discretize(Weibull(1, 0.6), 1.0, 4)
    F = lambda x: 1 - mpmath.exp(-mpmath.power(x, mpmath.mpf("0.6")))  # noqa: E731
    expected = [float(F(mpmath.mpf(j) / 4) - F(mpmath.mpf(j - 1) / 4)) for j in range(1, 5)]
    np.testing.assert_allclose(g.increments, expected, rtol=1e-14)


def test_text_round_trip():
    for spec in ALL:
        assert parse_distribution(spec.to_text()) == spec
    assert parse_distribution("weibull(alpha=2.64,beta=1.12)") == Weibull(2.64, 1.12)
    assert parse_distribution(" BurrXII( alpha = 1 , beta=2, nu=3 ) ") == BurrXII(1, 2, 3)


@pytest.mark.parametrize(
    "text,pos",
    [("weibull alpha=1", 0), ("cauchy(x=1)", 0), ("weibull(alpha=1,beta=2", 22),
     ("weibull(alpha=1,beta=x)", 21), ("weibull(alpha=1)", 8), ("weibull(alpha=1,beta=2) x", 23)],
)
def test_parse_errors(text, pos):
    with pytest.raises(SpecParseError) as exc:
        parse_distribution(text)
    assert exc.value.position == pos


@given(
    alpha=st.floats(0.05, 20), beta=st.floats(0.1, 5),
    t=st.lists(st.floats(0, 50), min_size=2, max_size=20),
)
def test_weibull_monotone_property(alpha, beta, t):
    t = np.sort(np.array(t))
    f, s = Weibull(alpha, beta).tails(t)
    assert np.all(np.diff(s) <= 0)
    assert np.all(f + s == 1.0)


@pytest.mark.parametrize(
    "spec,power",
    [
        (Exponential(2.0), None),
        (Weibull(1.0, 1.0), None),
        (Weibull(1.0, 2.0), None),
        (Weibull(1.0, 1.5), 1.5),
        (Gamma(3.0, 1.0), None),
        (Gamma(0.7, 1.0), 0.7),
        (BurrXII(1.0, 2.0, 0.5), None),
        (BurrXII(1.0, 0.8, 0.5), 0.8),
        # q = sigma = 1 is the exponential; q / sigma = 2 with 1 / (q sigma) = 2 is t^2 times a series in t^2
        (GenGamma(0.0, 1.0, 1.0), None),
        (GenGamma(0.0, 0.5, 1.0), None),
        (GenGamma(0.0, 0.5, 1.6), 1.25),
        (GenGamma(0.0, 1.0, 0.0), None),
        (GenGamma(0.0, 1.0, -0.5), None),
    ],
    ids=str,
)
def test_local_power_is_none_where_the_cdf_is_analytic(spec, power):
    assert spec.local_shape == (None if power is None else pytest.approx(power, rel=1e-15))
