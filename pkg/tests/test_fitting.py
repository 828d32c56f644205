import json
import math

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import gammainc

from renewal_count.datasets import FERTILITY_FREQUENCIES, fertility_counts
from renewal_count.fitting import (
    _ProbabilityCache,
    CountData,
    DataError,
    InsufficientCellsError,
    ModelSpec,
    NestingError,
    fit,
    gof_chisq,
    log_likelihood,
    lr_test,
    predict_pmf,
    standard_errors,
)


@pytest.fixture(scope="module")
def fertility():
    return fertility_counts()


@pytest.fixture(scope="module")
def fits(fertility):
    return {f: fit(ModelSpec(f), fertility) for f in ("poisson", "weibull", "gamma")}


# ---------------------------------------------------------------- data


def test_frequencies_round_trip(fertility):
    assert fertility.n == 1243
    np.testing.assert_array_equal(fertility.frequencies(), FERTILITY_FREQUENCIES)


def test_bad_counts():
    with pytest.raises(DataError):
        CountData.from_counts([1, -1])
    with pytest.raises(DataError):
        CountData.from_counts([1.5])
    with pytest.raises(DataError):
        CountData.from_counts([])


def test_csv_round_trip(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("count,x,censored\n2,0.5,0\n4,1.5,1\n\n0,-1,0\n")
    d = CountData.from_csv(p)
    assert d.counts.tolist() == [2, 4, 0]
    assert d.censored.tolist() == [False, True, False]
    assert d.covariate_names == ("x",)
    np.testing.assert_array_equal(d.design(["x"]), [[1, 0.5], [1, 1.5], [1, -1]])


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("", "empty file"),
        ("n,x\n1,2\n", "missing count column"),
        ("count,x\n1,2\n3\n", "row 3 has 1 cells"),
        ("count,x\n1,abc\n", "row 2, column 'x'"),
        ("count,x\n-2,1\n", "bad count"),
        ("count,censored\n1,2\n", "expected 0 or 1"),
        ("count,x\n", "no data rows"),
    ],
)
def test_csv_errors(tmp_path, body, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DataError, match=fragment):
        CountData.from_csv(p)


def test_unknown_covariate():
    with pytest.raises(DataError):
        CountData.from_counts([1, 2]).design(["age"])


def test_model_names_and_split():
    m = ModelSpec("gengamma", ("a", "b"), hurdle=True)
    assert m.coef_names() == ["(intercept)", "a", "b", "first:(intercept)", "first:a", "first:b", "sigma", "q"]
    g, gf, s = m.split(np.arange(8.0))
    assert g.tolist() == [0, 1, 2] and gf.tolist() == [3, 4, 5] and s.tolist() == [6, 7]
    with pytest.raises(ValueError):
        m.split(np.arange(7.0))
    with pytest.raises(ValueError):
        ModelSpec("lognormal")


# ---------------------------------------------------------------- likelihood


def test_poisson_toy_likelihood():
    d = CountData.from_counts([1, 3])
    expected = math.log(2 * math.exp(-2)) + math.log(8 * math.exp(-2) / 6)
    assert expected == pytest.approx(-3.0192, abs=5e-5)
    assert log_likelihood(ModelSpec("poisson"), [math.log(2)], d) == pytest.approx(expected, abs=1e-10)
    # the same model through the Weibull family with beta fixed at 1
    assert log_likelihood(ModelSpec("weibull"), [math.log(2), 1.0], d) == pytest.approx(expected, abs=1e-10)


def test_censored_rows():
    d = CountData.from_counts([2, 0], censored=[True, True])
    lam = 1.7
    p_ge2 = 1 - math.exp(-lam) * (1 + lam)
    assert log_likelihood(ModelSpec("poisson"), [math.log(lam)], d) == pytest.approx(math.log(p_ge2), abs=1e-6)


def test_underflow_gives_minus_inf():
    d = CountData.from_counts([400])
    assert log_likelihood(ModelSpec("poisson"), [math.log(0.01)], d) == -math.inf


def _gamma_closed_negll(theta):
    rate, shape = math.exp(theta[0]), math.exp(theta[1])
    m = np.arange(len(FERTILITY_FREQUENCIES))
    pm = gammainc(m * shape, rate) - gammainc((m + 1) * shape, rate)
    pm[0] = 1 - gammainc(shape, rate)
    return -float(np.sum(FERTILITY_FREQUENCIES * np.log(pm)))


def test_gamma_likelihood_matches_closed_form(fertility, fits):
    res = minimize(_gamma_closed_negll, [1.0, 0.1], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    theta = [res.x[0], math.exp(res.x[1])]
    # the tail cells are tiny, so their relative errors dominate; 48 steps
    # bring the sum within 1e-4 (24 steps leave about 2e-4)
    conv = log_likelihood(ModelSpec("gamma", n_steps=48), theta, fertility)
    assert conv == pytest.approx(-res.fun, abs=1e-4)
    # the default fit lands on the same optimum
    assert fits["gamma"].coef("shape") == pytest.approx(theta[1], abs=1e-3)
    assert fits["gamma"].log_likelihood == pytest.approx(-res.fun, abs=5e-4)


def test_cache_eviction_keeps_current_rows():
    d = CountData.from_counts([0, 1, 2, 3])
    model = ModelSpec("poisson")
    small = _ProbabilityCache(limit=5)
    fresh = log_likelihood(model, [0.3], d)
    assert log_likelihood(model, [0.3], d, small) == fresh
    # a second parameter value overflows the store while the first is cached
    log_likelihood(model, [0.5], d, small)
    assert log_likelihood(model, [0.3], d, small) == fresh
    assert len(small.store) <= 8


def test_hurdle_reduces_to_plain_model():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(60, 1))
    d = CountData(rng.poisson(2.0, 60), x, ("x",))
    plain = log_likelihood(ModelSpec("weibull", ("x",)), [0.6, 0.2, 1.3], d)
    hurdle = log_likelihood(ModelSpec("weibull", ("x",), hurdle=True), [0.6, 0.2, 0.6, 0.2, 1.3], d)
    assert hurdle == pytest.approx(plain, abs=1e-8)


# ---------------------------------------------------------------- fertility table


def test_poisson_fertility(fits):
    r = fits["poisson"]
    assert r.converged
    assert r.scale == pytest.approx(2.38, abs=0.005)
    # the MLE is the sample mean
    mean = np.dot(np.arange(12), FERTILITY_FREQUENCIES) / 1243
    assert r.scale == pytest.approx(mean, rel=1e-6)
    assert r.log_likelihood == pytest.approx(-2186.78, abs=0.05)
    assert r.aic == pytest.approx(4375.55, abs=0.05)
    assert r.se("(intercept)") == pytest.approx(0.02, abs=0.005)


def test_weibull_fertility(fits):
    r = fits["weibull"]
    assert r.log_likelihood == pytest.approx(-2180.36, abs=0.05)
    assert r.coef("beta") == pytest.approx(1.12, abs=0.01)
    assert r.se("beta") == pytest.approx(0.03, abs=0.01)
    assert r.scale == pytest.approx(2.64, abs=0.01)


def test_gamma_fertility(fits):
    r = fits["gamma"]
    assert r.scale == pytest.approx(0.35, abs=0.005)
    assert r.coef("shape") == pytest.approx(1.16, abs=0.01)


def test_information_criteria(fits):
    for r in fits.values():
        k = r.n_params
        assert r.aic == pytest.approx(-2 * r.log_likelihood + 2 * k, abs=1e-9)
        assert r.bic == pytest.approx(-2 * r.log_likelihood + k * math.log(1243), abs=1e-9)


def test_lr_tests(fits):
    stat, df, p = lr_test(fits["poisson"], fits["weibull"])
    assert stat == pytest.approx(12.84, abs=0.05) and df == 1
    assert 0 < p < 1e-3
    assert lr_test(fits["poisson"], fits["poisson"]) == (0.0, 0, 1.0)
    with pytest.raises(NestingError):
        lr_test(fits["weibull"], fits["poisson"])


def test_chi_squared(fertility, fits):
    stat, df, _ = gof_chisq(fits["poisson"], fertility)
    assert stat == pytest.approx(126.16, abs=0.5) and df == 6
    stat, df, _ = gof_chisq(fits["weibull"], fertility)
    assert df == 5


def test_chi_squared_perfect_fit_and_too_few_cells():
    pm = np.array([math.exp(-2) * 2**m / math.factorial(m) for m in range(16)])
    freq = np.round(pm * 1e6).astype(int)
    d = CountData.from_frequencies(freq)
    r = fit(ModelSpec("poisson"), d)
    stat, _, p = gof_chisq(r, d)
    assert stat < 1.0 and p > 0.5
    with pytest.raises(InsufficientCellsError):
        gof_chisq(r, CountData.from_frequencies([30, 30]))


def test_predict_pmf(fits):
    probs = predict_pmf(fits["poisson"], m_max=11).probs
    np.testing.assert_allclose(
        np.round(100 * probs, 1), [9.2, 22.0, 26.2, 20.8, 12.4, 5.9, 2.3, 0.8, 0.2, 0.1, 0.0, 0.0]
    )
    assert fits["weibull"].to_dict()["frequencies"][2]["observed"] == 483


def test_json_report(fits):
    d = json.loads(fits["weibull"].to_json())
    assert [c["name"] for c in d["coefficients"]] == ["(intercept)", "beta"]
    assert d["n_params"] == 2 and d["converged"] is True


# ---------------------------------------------------------------- synthetic data


def test_poisson_mle_synthetic():
    rng = np.random.default_rng(12)
    d = CountData.from_counts(rng.poisson(3.0, 10_000))
    r = fit(ModelSpec("poisson"), d)
    se = r.scale * r.se("(intercept)")
    assert abs(r.scale - 3.0) < 3 * se
    assert r.scale == pytest.approx(d.counts.mean(), rel=1e-6)


def test_weibull_on_poisson_data_has_unit_shape():
    rng = np.random.default_rng(3)
    d = CountData.from_counts(rng.poisson(2.0, 3000))
    r = fit(ModelSpec("weibull"), d)
    assert abs(r.coef("beta") - 1.0) < 3 * r.se("beta")


def test_dispersion_direction():
    # rising hazard means underdispersed counts, falling hazard overdispersed
    under = CountData.from_frequencies([5, 60, 300, 60, 5])
    over = CountData.from_frequencies([200, 100, 60, 50, 40, 30, 20])
    assert fit(ModelSpec("weibull"), under).coef("beta") > 1.5
    assert fit(ModelSpec("weibull"), over).coef("beta") < 0.9


def test_link_invariance_under_covariate_scaling():
    rng = np.random.default_rng(8)
    x = rng.normal(size=400)
    y = rng.poisson(np.exp(0.5 + 0.3 * x))
    a = fit(ModelSpec("poisson", ("x",)), CountData(y, x[:, None], ("x",)))
    b = fit(ModelSpec("poisson", ("x",)), CountData(y, 10 * x[:, None], ("x",)))
    assert b.log_likelihood == pytest.approx(a.log_likelihood, abs=1e-6)
    assert 10 * b.coef("x") == pytest.approx(a.coef("x"), rel=1e-4)


def test_regression_recovers_coefficients():
    rng = np.random.default_rng(1)
    x = rng.normal(size=1500)
    y = rng.poisson(np.exp(0.8 - 0.4 * x))
    r = fit(ModelSpec("poisson", ("x",)), CountData(y, x[:, None], ("x",)))
    assert abs(r.coef("x") + 0.4) < 3 * r.se("x")


def test_singular_hessian_gives_no_errors():
    assert standard_errors(np.array([[1.0, 1.0], [1.0, 1.0]])) is None
    np.testing.assert_allclose(standard_errors(np.diag([4.0, 25.0])), [0.5, 0.2])
