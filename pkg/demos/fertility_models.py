"""Fitting count models to completed fertility.

The bundled table holds the number of children of 1243 women. The counts
are underdispersed and pile up at two children. A Weibull gap with a
rising hazard improves on the Poisson model significantly, and the
generalized gamma gains another 13 log-likelihood points, yet the
chi-squared test still rejects all three: the spike at two is sharper
than any of these intercept-only models can produce.

    python3 demos/fertility_models.py
"""

from renewal_count import ModelSpec, fit, gof_chisq, lr_test
from renewal_count.datasets import fertility_counts
from renewal_count.fitting import expected_frequencies


def main():
    data = fertility_counts()
    fits = {family: fit(ModelSpec(family), data) for family in ("poisson", "weibull", "gengamma")}
    for family, res in fits.items():
        stat, df, pval = gof_chisq(res, data)
        shapes = ", ".join(f"{n}={v:.4f}" for n, v in zip(res.names[1:], res.estimates[1:]))
        print(f"{family:9} loglik {res.log_likelihood:10.3f}  AIC {res.aic:9.2f}  "
              f"chi2 {stat:7.2f} on {df} df (p={pval:.3g})  {shapes}")

    stat, df, pval = lr_test(fits["poisson"], fits["weibull"])
    print(f"\nPoisson inside Weibull: LR {stat:.2f} on {df} df, p={pval:.3g}")

    observed = data.frequencies()
    expected = expected_frequencies(fits["weibull"], data, len(observed) - 1)
    print("\ncount  observed  Weibull expected")
    for m, (o, e) in enumerate(zip(observed, expected)):
        print(f"{m:5d}  {o:8d}  {e:16.1f}")


if __name__ == "__main__":
    main()
