"""All count probabilities P_0(t)..P_m(t) by repeated discrete convolution.

Each inter-arrival time is replaced by a lattice variable that puts the
mass q_j = F(j h) - F((j-1) h) at the cell midpoint (j - 1/2) h. The k-fold
convolution of the masses then lives on points (J + k/2) h, half a step
further right per convolution, which is tracked through the index rather
than by moving data. P_k(t) is the final integral of that lattice mass
against the survival function over the remaining time t - (J + k/2) h.

Cost per count level: one truncated convolution (N(N+1)/2 products) plus
an N-term dot product.
"""

from __future__ import annotations

import numpy as np

from ._lattice import Lattice, final_integral
from .distributions import Distribution
from .extrapolate import extrapolated
from .results import ProbabilityVector, Stage, censored_tail

__all__ = ["ProbabilityVector", "all_probs", "censored_tail", "default_steps", "direct_from_lattice"]

#: steps needed for about 1e-8 accuracy on low counts, with and without
#: extrapolation
STEPS_EXTRAPOLATED = 24
STEPS_RAW = 132


def default_steps(stage) -> int:
    return STEPS_RAW if Stage(stage) is Stage.RAW else STEPS_EXTRAPOLATED


def direct_from_lattice(lat: Lattice, m_max: int) -> np.ndarray:
    n = lat.n_steps
    probs = np.zeros(m_max + 1)
    probs[0] = lat.node_survival[n]
    mass = lat.q
    for k in range(1, m_max + 1):
        if k > 1:
            # points beyond index N - ceil(k/2) lie past t at this level
            keep = n - (k + 1) // 2 + 1
            if keep <= 0:
                break
            mass = np.convolve(mass[:keep], lat.q[:keep])[:keep]
        probs[k] = final_integral(mass, k, lat)
    return probs


def all_probs(
    spec: Distribution,
    t: float,
    m_max: int,
    n_steps: int | None = None,
    extrapolation="stage2",
) -> ProbabilityVector:
    """P_0(t)..P_{m_max}(t) for a renewal process with inter-arrivals ``spec``.

    ``n_steps`` is the base step count N (default 24 with extrapolation,
    132 without); extrapolation stages use N, 2N, 4N, ... steps.
    """
    if int(m_max) != m_max or m_max < 0:
        raise ValueError("m_max must be a non-negative integer")
    stage = Stage(extrapolation)
    n = default_steps(stage) if n_steps is None else n_steps
    if m_max == 0:
        return ProbabilityVector(np.array([spec.survival(t)]), t, int(n), stage, "direct")
    if n < 2:
        raise ValueError("direct convolution needs n_steps >= 2")
    values, _ = extrapolated([spec], t, n, stage, lambda lat: direct_from_lattice(lat, int(m_max)))
    return ProbabilityVector(values, t, int(n), stage, "direct")
