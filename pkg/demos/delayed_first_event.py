"""A process whose first gap differs from the later ones.

Customers who have just made a purchase are followed from time zero, so
the first gap is a full gap; a process observed from an arbitrary moment
starts part way through a gap, which is shorter on average. Here the first
gap is exponential and the later ones are gamma with shape 2. The
convolution result is checked against a seeded Monte Carlo run.

    python3 demos/delayed_first_event.py
"""

from renewal_count import Exponential, Gamma, ModifiedSpec, modified_all_probs, simulate_pmf


def main():
    spec = ModifiedSpec(first=Exponential(1.0), rest=Gamma(2.0, 2.0))
    t, m_max, draws = 3.0, 8, 200_000
    exact = modified_all_probs(spec, t, m_max).probs
    sim = simulate_pmf(spec, t, draws, seed=11)
    print(" m   convolution   Monte Carlo   z-score")
    for m, (p, q, se) in enumerate(zip(exact, sim.probability, sim.std_error)):
        if m > m_max:
            break
        z = (q - p) / se if se > 0 else float("nan")
        print(f"{m:2d}   {p:11.6f}   {q:11.6f}   {z:7.2f}")


if __name__ == "__main__":
    main()
