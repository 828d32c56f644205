"""Counts for modified (delayed) renewal processes.

The time to the first event has its own distribution ``first``; later gaps
follow ``rest``. On the lattice, the first gap contributes its own cell
masses and the remaining m - 1 gaps the m-1 fold convolution of the
``rest`` masses, so the total half-step shift is still (m/2) h and the
final integral against the ``rest`` survival function is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._lattice import Lattice, final_integral
from .depril import _check_m, _steps, depril_convolution
from .distributions import Distribution
from .extrapolate import extrapolated
from .results import ProbabilityVector, Stage


@dataclass(frozen=True)
class ModifiedSpec:
    """Gap distributions: ``first`` for the first event, ``rest`` afterwards."""

    first: Distribution
    rest: Distribution

    def __post_init__(self):
        for name in ("first", "rest"):
            if not isinstance(getattr(self, name), Distribution):
                raise TypeError(f"{name} must be a Distribution")

    @property
    def is_ordinary(self) -> bool:
        return self.first == self.rest


def _mass(first: Lattice, rest: Lattice, m: int) -> np.ndarray:
    n = rest.n_steps
    keep = n - (m + 1) // 2 + 1
    if m == 1:
        return first.q
    tail = rest.q if m == 2 else depril_convolution(rest.q, m - 1, length=keep)
    return np.convolve(first.q[:keep], tail[:keep])[:keep]


def modified_from_lattices(first: Lattice, rest: Lattice, m: int) -> float:
    if m == 0:
        return float(first.node_survival[first.n_steps])
    if rest.n_steps - (m + 1) // 2 < 0:
        return 0.0
    return final_integral(_mass(first, rest, m), m, rest)


def modified_all_from_lattices(first: Lattice, rest: Lattice, m_max: int) -> np.ndarray:
    n = rest.n_steps
    probs = np.zeros(m_max + 1)
    probs[0] = first.node_survival[n]
    mass = first.q
    for k in range(1, m_max + 1):
        if k > 1:
            keep = n - (k + 1) // 2 + 1
            if keep <= 0:
                break
            mass = np.convolve(mass[:keep], rest.q[:keep])[:keep]
        probs[k] = final_integral(mass, k, rest)
    return probs


def modified_prob(
    mspec: ModifiedSpec, t: float, m: int, n_steps: int | None = None, extrapolation="stage2"
) -> float:
    """P_m(t) for a delayed renewal process.

    m = 0 is the survival of ``first``; m = 1 convolves the first-gap
    masses with the ``rest`` survival; larger m inserts the (m-1)-fold
    ``rest`` convolution from De Pril's recursion.
    """
    m = _check_m(m, 0)
    if m == 0:
        return float(mspec.first.survival(t))
    n = _steps(extrapolation, n_steps)
    values, _ = extrapolated(
        [mspec.first, mspec.rest],
        t,
        n,
        extrapolation,
        lambda a, b: [modified_from_lattices(a, b, m)],
        midpoints=m % 2 == 1,
    )
    return float(values[0])


def modified_all_probs(
    mspec: ModifiedSpec, t: float, m_max: int, n_steps: int | None = None, extrapolation="stage2"
) -> ProbabilityVector:
    """P_0(t)..P_{m_max}(t) for a delayed renewal process, sharing one set of grids."""
    m_max = _check_m(m_max, 0)
    stage = Stage(extrapolation)
    n = _steps(stage, n_steps)
    if m_max == 0:
        return ProbabilityVector(np.array([mspec.first.survival(t)]), t, n, stage, "modified")
    values, _ = extrapolated(
        [mspec.first, mspec.rest],
        t,
        n,
        stage,
        lambda a, b: modified_all_from_lattices(a, b, m_max),
    )
    return ProbabilityVector(values, t, n, stage, "modified")
