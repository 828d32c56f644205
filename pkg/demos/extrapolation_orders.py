"""Why three extrapolation stages, and why their exponents depend on beta.

With N cells the raw probabilities err by about h^(beta+1) for a Weibull
gap with non-integer beta, since its cdf behaves like t^beta near zero.
Removing that term first, then h^2, leaves an error near h^(beta+2).
Each row shows relative errors at N = 32 and the empirical orders of
the raw and extrapolated values against a fine-grid reference.

    python3 demos/extrapolation_orders.py
"""

from renewal_count.study import weibull_order_study


def main():
    for beta in (0.5, 1.5, 2.5):
        study = weibull_order_study(beta, m_max=8)
        raw, s1, s2 = study.median_orders(m_min=1)
        print(f"beta={beta}: median orders raw {raw:.2f}, stage 1 {s1:.2f}, stage 2 {s2:.2f}")
        print("   m    raw err      stage 1     stage 2")
        for m, e0, e1, e2 in zip(study.m, study.raw_err, study.stage1_err, study.stage2_err):
            print(f"  {m:2d}  {e0:10.2e}  {e1:10.2e}  {e2:10.2e}")


if __name__ == "__main__":
    main()
