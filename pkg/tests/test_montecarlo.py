import math

import numpy as np
import pytest
from scipy.stats import poisson

from renewal_count.direct import all_probs
from renewal_count.distributions import BurrXII, Distribution, Exponential, Gamma, GenGamma, Weibull
from renewal_count.montecarlo import counter_uniforms, poisson_pmf, sample_interarrival, simulate_pmf


def test_inverse_examples():
    assert sample_interarrival(Weibull(1, 1), 1 - math.exp(-1)) == pytest.approx(1.0, rel=1e-14)
    assert sample_interarrival(BurrXII(1, 1, 1), 0.5) == pytest.approx(1.0, rel=1e-14)
    g = GenGamma(0.3, 0.8, 0.5)
    assert g.cdf(sample_interarrival(g, 0.73)) == pytest.approx(0.73, abs=1e-10)


@pytest.mark.parametrize(
    "spec",
    [Exponential(2.0), Weibull(1.5, 0.6), BurrXII(2, 1.5, 0.7), Gamma(0.7, 2.0), Gamma(3.0, 1.0),
     GenGamma(0.3, 0.8, 0.5), GenGamma(0.1, 0.7, -0.6), GenGamma(0.0, 1.2, 0.0)],
    ids=str,
)
def test_inverse_round_trip(spec):
    u = np.linspace(0.001, 0.999, 41)
    np.testing.assert_allclose(spec.cdf(sample_interarrival(spec, u)), u, atol=1e-10)


class Triangular(Distribution):
    """Density 2(1 - t) on [0, 1]: exercises the bisection fallback."""

    family = "triangular"

    def _tails(self, t):
        s = np.where(t < 1, (1 - np.minimum(t, 1)) ** 2, 0.0)
        return 1 - s, s


def test_bisection_fallback():
    u = np.array([0.1, 0.5, 0.9])
    x = sample_interarrival(Triangular(), u)
    np.testing.assert_allclose(Triangular().cdf(x), u, atol=1e-12)


def test_domain():
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            sample_interarrival(Weibull(1, 1), bad)
    with pytest.raises(ValueError):
        simulate_pmf(Weibull(1, 1), 1.0, 0, 1)


def test_uniforms_open_interval_and_deterministic():
    u = counter_uniforms(7, np.arange(100_000), 3)
    assert np.all((u > 0) & (u < 1))
    assert abs(u.mean() - 0.5) < 0.005
    np.testing.assert_array_equal(u, counter_uniforms(7, np.arange(100_000), 3))
    assert not np.array_equal(u, counter_uniforms(8, np.arange(100_000), 3))


def test_poisson_agreement():
    sim = simulate_pmf(Exponential(2.38), 1.0, 10**6, seed=11)
    p = poisson.pmf(sim.count, 2.38)
    assert np.all(np.abs(sim.probability - p) < 4 * np.maximum(sim.std_error, 1e-7))
    np.testing.assert_allclose(poisson_pmf(2.38, 5), poisson.pmf(np.arange(6), 2.38), rtol=1e-13)


def test_single_draw_is_one_hot():
    sim = simulate_pmf(Weibull(1, 0.6), 1.0, 1, seed=5)
    assert sim.frequency.sum() == 1
    assert sorted(set(sim.probability.tolist())) in ([1.0], [0.0, 1.0])


def test_reproducible_and_thread_independent():
    a = simulate_pmf(Weibull(1, 0.6), 1.0, 200_000, seed=9, threads=1)
    b = simulate_pmf(Weibull(1, 0.6), 1.0, 200_000, seed=9, threads=3)
    np.testing.assert_array_equal(a.frequency, b.frequency)
    c = simulate_pmf(Weibull(1, 0.6), 1.0, 200_000, seed=10)
    assert not np.array_equal(a.frequency, c.frequency)


def test_against_convolution_weibull():
    spec = Weibull(1.0, 0.6)
    sim = simulate_pmf(spec, 1.0, 10**6, seed=3)
    pv = all_probs(spec, 1.0, len(sim.frequency) - 1)
    mask = pv.probs > 1e-4
    assert np.all(np.abs(sim.probability - pv.probs)[mask] < 4 * sim.std_error[mask])


def test_error_shrinks_like_root_n():
    spec = Exponential(2.38)
    errs = []
    for n in (10**4, 10**6):
        sim = simulate_pmf(spec, 1.0, n, seed=21)
        errs.append(np.max(np.abs(sim.probability - poisson.pmf(sim.count, 2.38))))
    # ratio of root-n rates is 10; allow for sampling luck
    assert 3 < errs[0] / errs[1] < 30


def test_rows_and_std_errors():
    sim = simulate_pmf(Exponential(1.0), 1.0, 1000, seed=1)
    rows = list(sim.rows())
    assert rows[0][0] == 0 and sum(r[1] for r in rows) == 1000
    p = sim.probability
    np.testing.assert_allclose(sim.std_error, np.sqrt(p * (1 - p) / 1000))
