"""Single count probabilities P_m(t) without computing the lower orders.

Two routes to the m-fold convolution of the cell masses:

* De Pril's recursion, O(N^2) whatever m is;
* an addition chain over the binary digits of m, O(log(m) N^2), kept as a
  cross-check and for timing comparisons.

Both finish with the same continuity-corrected final integral as the
direct engine, so on a common grid all three agree to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._lattice import Lattice, final_integral, mass_below
from .direct import STEPS_EXTRAPOLATED, STEPS_RAW
from .distributions import Distribution
from .extrapolate import extrapolated
from .results import Stage


class RecursionDomainError(ValueError):
    """The De Pril recursion is undefined or numerically unreliable for these masses."""


def _steps(stage, n_steps):
    if n_steps is not None:
        return int(n_steps)
    return STEPS_RAW if Stage(stage) is Stage.RAW else STEPS_EXTRAPOLATED


def _check_m(m, minimum):
    if int(m) != m or m < minimum:
        raise ValueError(f"m must be an integer >= {minimum}")
    return int(m)


# a convolution power of cell masses lies in [0, 1]; the recursion divides
# by q_0 at every step, so leaving this band means rounding has taken over
_BAND = 1e-9
# largest accepted sum |f^(m-1) * q - f^(m)| over the output cells
_RESIDUAL = 1e-12


def depril_convolution(q, m: int, length: int | None = None) -> np.ndarray:
    """m-fold self-convolution of ``q`` truncated to ``length`` points.

    f_0 = q_0^m and, for n >= 1,
    f_n = (1 / q_0) sum_{j=1..n} ((m + 1) j / n - 1) q_j f_{n-j}.
    Entries of ``q`` past the end are taken as zero. Leading zero cells are
    shifted out first (k zeros move the m-fold result by m k places).

    The recursion loses accuracy when the masses rise steeply from a small
    q_0 (steep cdf at the origin, fine grids, small m). Order m - 1 is run
    alongside and the result is accepted only when convolving it once more
    with ``q`` reproduces order m; otherwise RecursionDomainError is raised.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or len(q) == 0:
        raise ValueError("q must be a non-empty 1-d sequence")
    m = _check_m(m, 1)
    if np.any(q < 0):
        raise RecursionDomainError("cell masses must be non-negative")
    n_out = len(q) if length is None else int(length)
    f = np.zeros(n_out, dtype=q.dtype)
    nonzero = np.flatnonzero(q)
    if n_out == 0 or len(nonzero) == 0:
        return f
    k = int(nonzero[0])
    if m * k >= n_out:
        return f
    f[m * k:] = _checked_recursion(q[k:], m, n_out - m * k)
    return f


def _padded(q, n_out):
    qp = np.zeros(n_out, dtype=q.dtype)
    k = min(len(q), n_out)
    qp[:k] = q[:k]
    return qp


def _recursion(q, m, n_out):
    """De Pril's recursion for order m >= 0 with q_0 > 0, no checks."""
    f = np.zeros(n_out, dtype=q.dtype)
    with np.errstate(under="ignore"):
        f[0] = q[0] ** m
    qp = _padded(q, n_out)
    with np.errstate(over="ignore"):
        inv_q0 = 1.0 / q[0]
    j = np.arange(1, n_out, dtype=q.dtype)
    jq = j * qp[1:]
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_out):
            # sum_j ((m+1) j/n - 1) q_j f_{n-j}
            fr = f[n - 1::-1]
            s = ((m + 1) / n) * jq[:n].dot(fr) - qp[1:n + 1].dot(fr)
            f[n] = s * inv_q0
    return f


def _checked_recursion(q, m, n_out):
    qp = _padded(q, n_out)
    if m == 1:
        return qp
    f = _recursion(q, m, n_out)
    prev = qp if m == 2 else _recursion(q, m - 1, n_out)
    with np.errstate(over="ignore", invalid="ignore"):
        residual = np.abs(np.convolve(prev, qp)[:n_out] - f).sum()
        ok = np.all(np.isfinite(f)) and f.min() >= -_BAND and f.max() <= 1.0 + _BAND and residual <= _RESIDUAL
    if not ok:
        raise RecursionDomainError(
            f"recursion unstable: first cell mass {q[0]:.3g} is too small next to later cells; "
            "use fewer steps or the chain engine"
        )
    return f


def self_convolve_symmetric(f) -> np.ndarray:
    """f * f truncated to len(f), using g_n = 2 sum_{i<n/2} f_i f_{n-i} (+ f_{n/2}^2)."""
    f = np.asarray(f, dtype=float)
    if len(f) == 0:
        raise ValueError("f must be non-empty")
    n_out = len(f)
    g = np.empty(n_out)
    for n in range(n_out):
        half = (n + 1) // 2
        s = 2.0 * f[:half].dot(f[n:n - half:-1]) if half else 0.0
        if n % 2 == 0:
            s += f[n // 2] ** 2
        g[n] = s
    return g


def _convolve_truncated(a, b, n_out):
    return np.convolve(a[:n_out], b[:n_out])[:n_out]


def addition_chain(m: int) -> list[tuple[str, int]]:
    """Convolution plan reaching order m from the binary digits of m.

    Returns a list of ("double", order reached) and ("add", order reached)
    steps; its length is the number of convolutions. For m = 21 = 1 + 4 + 16
    the plan doubles to 2, 4, 8, 16 and adds at 5 and 21: six convolutions.
    """
    m = _check_m(m, 1)
    plan: list[tuple[str, int]] = []
    power = 1
    acc = None
    bits = m
    while True:
        if bits & 1:
            if acc is None:
                acc = power
            else:
                acc += power
                plan.append(("add", acc))
        bits >>= 1
        if not bits:
            break
        power *= 2
        plan.append(("double", power))
    return plan


def chain_convolution(q, m: int) -> tuple[np.ndarray, int]:
    """m-fold convolution of ``q`` by the addition chain; also returns the count."""
    q = np.asarray(q, dtype=float)
    n_out = len(q)
    power = q
    acc = None
    count = 0
    bits = _check_m(m, 1)
    while True:
        if bits & 1:
            if acc is None:
                acc = power
            else:
                acc = _convolve_truncated(acc, power, n_out)
                count += 1
        bits >>= 1
        if not bits:
            break
        power = self_convolve_symmetric(power)
        count += 1
    return acc, count


@dataclass
class ConvolutionWorkspace:
    """Buffers for one single-probability computation on a lattice.

    Not safe to share between concurrent calls.
    """

    lattice: Lattice
    f: np.ndarray = field(init=False)

    def __post_init__(self):
        self.f = np.zeros(self.lattice.n_steps)

    def mfold(self, m: int) -> np.ndarray:
        q = self.lattice.q
        if m == 1:
            self.f = q.copy()
        else:
            self.f = depril_convolution(q, m, length=self._needed(m))
        return self.f

    def _needed(self, m):
        return max(0, min(self.lattice.n_steps, self.lattice.n_steps - (m + 1) // 2 + 1))


def depril_from_lattice(lat: Lattice, m: int) -> float:
    if m == 0:
        return float(lat.node_survival[lat.n_steps])
    if lat.n_steps - (m + 1) // 2 < 0:
        return 0.0
    ws = ConvolutionWorkspace(lat)
    return final_integral(ws.mfold(m), m, lat)


def depril_censored_from_lattice(lat: Lattice, m: int) -> float:
    if lat.n_steps - (m + 1) // 2 < 0:
        return 0.0
    ws = ConvolutionWorkspace(lat)
    return mass_below(ws.mfold(m), m, lat.n_steps)


def chain_from_lattice(lat: Lattice, m: int) -> float:
    if m == 0:
        return float(lat.node_survival[lat.n_steps])
    if lat.n_steps - (m + 1) // 2 < 0:
        return 0.0
    mass, _ = chain_convolution(lat.q, m)
    return final_integral(mass, m, lat)


def chain_censored_from_lattice(lat: Lattice, m: int) -> float:
    if lat.n_steps - (m + 1) // 2 < 0:
        return 0.0
    mass, _ = chain_convolution(lat.q, m)
    return mass_below(mass, m, lat.n_steps)


def depril_prob(
    spec: Distribution, t: float, m: int, n_steps: int | None = None, extrapolation="stage2"
) -> float:
    """P_m(t) by De Pril's recursion and the corrected final integral.

    The lattice mass of m convolved cells stands for time (J + m/2) h, so the
    survival function is read at t - (J + m/2) h; for even m that only
    touches grid nodes and the mass landing exactly on t counts half.
    """
    m = _check_m(m, 0)
    if m == 0:
        return float(spec.survival(t))
    n = _steps(extrapolation, n_steps)
    values, _ = extrapolated(
        [spec], t, n, extrapolation, lambda lat: [depril_from_lattice(lat, m)], midpoints=m % 2 == 1
    )
    return float(values[0])


def depril_censored(
    spec: Distribution, t: float, m: int, n_steps: int | None = None, extrapolation="stage2"
) -> float:
    """P(N_t >= m) as the integral of the m-fold density up to t.

    Integrating avoids the cancellation of 1 - sum_{i<m} P_i when the tail
    is small.
    """
    m = _check_m(m, 1)
    n = _steps(extrapolation, n_steps)
    values, _ = extrapolated(
        [spec], t, n, extrapolation, lambda lat: [depril_censored_from_lattice(lat, m)], midpoints=False
    )
    return float(np.clip(values[0], 0.0, 1.0))


def chain_prob(
    spec: Distribution, t: float, m: int, n_steps: int | None = None, extrapolation="stage2"
) -> float:
    """P_m(t) with the m-fold density built by an addition chain."""
    m = _check_m(m, 0)
    if m == 0:
        return float(spec.survival(t))
    n = _steps(extrapolation, n_steps)
    values, _ = extrapolated(
        [spec], t, n, extrapolation, lambda lat: [chain_from_lattice(lat, m)], midpoints=m % 2 == 1
    )
    return float(values[0])


def chain_censored(
    spec: Distribution, t: float, m: int, n_steps: int | None = None, extrapolation="stage2"
) -> float:
    """P(N_t >= m) from the addition-chain m-fold density.

    Unlike the recursion this never divides by the first cell, so it stays
    stable when that cell is tiny next to later ones.
    """
    m = _check_m(m, 1)
    n = _steps(extrapolation, n_steps)
    values, _ = extrapolated(
        [spec], t, n, extrapolation, lambda lat: [chain_censored_from_lattice(lat, m)], midpoints=False
    )
    return float(np.clip(values[0], 0.0, 1.0))
