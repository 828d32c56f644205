"""Monte Carlo simulation of renewal counts, used as an independent check.

Uniforms come from a counter-based generator: the value for (seed, draw,
event) is a fixed hash of those three integers, so a run is bit-identical
on every platform and any block of draws can be generated on its own.
The hash is the SplitMix64 finalizer::

    z = seed * K0 + draw * K1 + event * K2 + K0   (mod 2^64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)
    u = ((z >> 11) + 0.5) / 2^53

with K0 = 0x9E3779B97F4A7C15, K1 = 0xD1B54A32D192ED03 and
K2 = 0x8CB92BA72F3D8DD7. The half offset keeps u strictly inside (0, 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv, gammainccinv, ndtri

from .distributions import BurrXII, Distribution, Exponential, Gamma, GenGamma, Weibull
from .modified import ModifiedSpec

K0 = np.uint64(0x9E3779B97F4A7C15)
K1 = np.uint64(0xD1B54A32D192ED03)
K2 = np.uint64(0x8CB92BA72F3D8DD7)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)

_BLOCK = 65536


def counter_uniforms(seed: int, draws, event: int) -> np.ndarray:
    """Uniforms in (0, 1) for the given draw indices at one event index."""
    with np.errstate(over="ignore"):
        d = np.asarray(draws, dtype=np.uint64)
        z = np.uint64(seed % 2**64) * K0 + d * K1 + np.uint64(event) * K2 + K0
        z = (z ^ (z >> np.uint64(30))) * M1
        z = (z ^ (z >> np.uint64(27))) * M2
        z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53


def _bisect_quantile(spec: Distribution, u: np.ndarray) -> np.ndarray:
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    while True:
        short = spec.cdf(hi) < u
        if not short.any():
            break
        hi = np.where(short, hi * 2.0, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = spec.cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-13 * np.maximum(hi, 1e-300)):
            break
    return 0.5 * (lo + hi)


def sample_interarrival(spec: Distribution, u):
    """Inverse cdf F^-1(u) for u in (0, 1), elementwise."""
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("u must lie strictly inside (0, 1)")
    if isinstance(spec, Exponential):
        out = -np.log1p(-arr) / spec.rate
    elif isinstance(spec, Weibull):
        out = np.exp(np.log(-np.log1p(-arr)) / spec.beta) / spec.alpha
    elif isinstance(spec, BurrXII):
        # (1 - u)^(-1/nu) - 1, via expm1 for small u
        x = np.expm1(-np.log1p(-arr) / spec.nu)
        out = np.exp(np.log(x) / spec.beta) / spec.alpha
    elif isinstance(spec, Gamma):
        out = gammaincinv(spec.shape, arr) / spec.rate
    elif isinstance(spec, GenGamma):
        if spec.q == 0.0:
            z = ndtri(arr)
        elif abs(spec.q) < 1e-3:
            # log(w / g) / q loses about eps / q here; invert the cdf instead
            flat = _bisect_quantile(spec, np.atleast_1d(arr))
            return float(flat[0]) if np.ndim(arr) == 0 else flat.reshape(arr.shape)
        else:
            g = 1.0 / spec.q**2
            # q > 0: F = P(g, u); q < 0: F = Q(g, u)
            w = gammaincinv(g, arr) if spec.q > 0 else gammainccinv(g, arr)
            z = np.log(w / g) / spec.q
        out = np.exp(spec.mu + spec.sigma * z)
    else:
        out = _bisect_quantile(spec, np.atleast_1d(arr)).reshape(arr.shape)
    return float(out) if np.ndim(out) == 0 else out


def _count_block(first, rest, t, seed, start, stop):
    draws = np.arange(start, stop, dtype=np.uint64)
    clock = np.asarray(sample_interarrival(first, counter_uniforms(seed, draws, 0)), dtype=float)
    counts = np.zeros(len(draws), dtype=np.int64)
    active = np.flatnonzero(clock <= t)
    event = 1
    while active.size:
        counts[active] += 1
        u = counter_uniforms(seed, draws[active], event)
        clock[active] += np.asarray(sample_interarrival(rest, u), dtype=float)
        active = active[clock[active] <= t]
        event += 1
    return np.bincount(counts)


def _threads() -> int:
    raw = os.environ.get("RENEWAL_COUNT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class SimulatedPMF:
    """Empirical distribution of N(t) from ``n_draws`` simulated paths."""

    frequency: np.ndarray
    n_draws: int
    seed: int

    @property
    def count(self) -> np.ndarray:
        return np.arange(len(self.frequency))

    @property
    def probability(self) -> np.ndarray:
        return self.frequency / self.n_draws

    @property
    def std_error(self) -> np.ndarray:
        p = self.probability
        return np.sqrt(p * (1.0 - p) / self.n_draws)

    def rows(self):
        for m, f, p, s in zip(self.count, self.frequency, self.probability, self.std_error):
            yield int(m), int(f), float(p), float(s)


def simulate_pmf(spec, t: float, n_draws: int, seed: int, threads: int | None = None) -> SimulatedPMF:
    """Simulate ``n_draws`` renewal paths on [0, t] and tabulate N(t).

    ``spec`` is a Distribution or a :class:`ModifiedSpec`. Draws are split
    into fixed blocks whose counts are added, so the result does not depend
    on the number of threads.
    """
    if int(n_draws) != n_draws or n_draws < 1:
        raise ValueError("n_draws must be a positive integer")
    if not t > 0:
        raise ValueError("horizon t must be positive")
    if isinstance(spec, ModifiedSpec):
        first, rest = spec.first, spec.rest
    else:
        first = rest = spec
    n_draws = int(n_draws)
    bounds = [(s, min(s + _BLOCK, n_draws)) for s in range(0, n_draws, _BLOCK)]
    workers = min(threads or _threads(), len(bounds))

    def run(b):
        return _count_block(first, rest, t, int(seed), *b)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    size = max(len(p) for p in parts)
    total = np.zeros(size, dtype=np.int64)
    for p in parts:
        total[: len(p)] += p
    return SimulatedPMF(total, n_draws, int(seed))


def poisson_pmf(rate: float, m_max: int) -> np.ndarray:
    """Poisson probabilities 0..m_max, for comparisons."""
    m = np.arange(m_max + 1)
    return np.exp(-rate + m * math.log(rate) - np.array([math.lgamma(k + 1) for k in m]))
