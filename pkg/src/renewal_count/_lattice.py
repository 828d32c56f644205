"""Survival-function samples shared by the convolution engines.

A lattice for N steps over [0, t] holds S at the nodes j h (j = 0..N), S at
the cell midpoints (j - 1/2) h when requested, and the cell masses
q_j = F(j h) - F((j-1) h). Lattices for N, 2N, 4N, ... are sliced out of a
single evaluation on the finest grid, so each survival value is computed
once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, _increments


@dataclass(frozen=True)
class Lattice:
    t: float
    n_steps: int
    node_survival: np.ndarray
    mid_survival: np.ndarray | None
    q: np.ndarray

    @property
    def h(self) -> float:
        return self.t / self.n_steps


def _check(t: float, n_steps: int) -> None:
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("n_steps must be a positive integer")
    if not t > 0:
        raise ValueError("horizon t must be positive")


def sample_lattices(
    spec: Distribution, t: float, n_base: int, levels: int = 1, midpoints: bool = True
) -> list[Lattice]:
    """Lattices for ``n_base * 2**i`` steps, i < levels, from one evaluation."""
    _check(t, n_base)
    n_base = int(n_base)
    n_top = n_base * 2 ** (levels - 1)
    n_fine = 2 * n_top if midpoints else n_top
    lower, upper = spec.tails(t * np.arange(n_fine + 1) / n_fine)
    out = []
    for i in range(levels):
        n = n_base * 2**i
        stride = n_fine // n
        node_lo = lower[::stride]
        node_up = upper[::stride]
        mid = upper[stride // 2::stride] if midpoints else None
        out.append(Lattice(t, n, node_up, mid, _increments(node_lo, node_up)))
    return out


def sample_lattice(spec: Distribution, t: float, n_steps: int, midpoints: bool = True) -> Lattice:
    return sample_lattices(spec, t, n_steps, 1, midpoints)[0]


def final_integral(mass: np.ndarray, m: int, lat: Lattice) -> float:
    """Sum mass[J] * S(t - (J + m/2) h) over lattice points at or before t.

    ``mass`` is the m-fold convolution of the cell masses; its index J
    stands for time (J + m/2) h. For even m the point J = N - m/2 sits
    exactly at t and only half its mass is counted.
    """
    n = lat.n_steps
    if m % 2 == 0:
        top = n - m // 2
        if top < 0:
            return 0.0
        surv = lat.node_survival[n - np.arange(top + 1) - m // 2]
        return float(mass[:top].dot(surv[:top]) + 0.5 * mass[top] * surv[top])
    top = n - (m + 1) // 2
    if top < 0:
        return 0.0
    surv = lat.mid_survival[n - 1 - np.arange(top + 1) - (m - 1) // 2]
    return float(mass[: top + 1].dot(surv))


def mass_below(mass: np.ndarray, m: int, n: int) -> float:
    """Sum of the m-fold lattice mass at times up to t (half weight at t)."""
    if m % 2 == 0:
        top = n - m // 2
        if top < 0:
            return 0.0
        return float(mass[:top].sum() + 0.5 * mass[top])
    top = n - (m + 1) // 2
    if top < 0:
        return 0.0
    return float(mass[: top + 1].sum())
