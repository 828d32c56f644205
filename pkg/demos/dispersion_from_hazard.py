"""How the gap distribution shapes the count distribution.

A Weibull process with beta = 1 is the Poisson process. Rising hazards
(beta > 1) space events more evenly and give underdispersed counts; falling
hazards (beta < 1) cluster them and give overdispersion. The script prints
P_0..P_8 at t = 1 next to the Poisson pmf and the variance-to-mean ratio.

    python3 demos/dispersion_from_hazard.py
"""

import math

import numpy as np

from renewal_count import Weibull, all_probs
from renewal_count.montecarlo import poisson_pmf

M_MAX = 30


def summary(p):
    m = np.arange(len(p))
    mean = float(m @ p)
    var = float((m - mean) ** 2 @ p)
    return mean, var


def main():
    rate = 3.0
    print(f"Poisson({rate}):", " ".join(f"{v:.4f}" for v in poisson_pmf(rate, 8)))
    for beta in (0.5, 1.0, 1.5, 3.0):
        # alpha chosen so the first gap has mean 1 / rate
        alpha = rate * math.gamma(1.0 + 1.0 / beta)
        p = all_probs(Weibull(alpha, beta), 1.0, M_MAX).probs
        mean, var = summary(p)
        print(f"beta={beta:<4} P0..P8:", " ".join(f"{v:.4f}" for v in p[:9]),
              f"| mean {mean:.3f} var/mean {var / mean:.3f}")


if __name__ == "__main__":
    main()
