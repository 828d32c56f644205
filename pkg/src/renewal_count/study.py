"""Error-order studies and timing benchmarks.

The order study compares raw, once- and twice-extrapolated probabilities
with a reference computed on a very fine grid (stage two over 5000, 10000
and 20000 steps) and estimates the empirical error power of each stage
from its values at N, 2N and 4N.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from ._lattice import sample_lattice, sample_lattices
from .depril import chain_convolution, chain_from_lattice, depril_from_lattice
from .direct import direct_from_lattice
from .distributions import Distribution, Weibull
from .extrapolate import aitken, build_report, combine, exponents_for
from .results import Stage

REFERENCE_STEPS = 20000


def reference_probs(spec: Distribution, t: float, m_max: int, finest: int = REFERENCE_STEPS) -> np.ndarray:
    """Stage-two extrapolated direct convolution whose finest grid has ``finest`` steps."""
    if finest % 4:
        raise ValueError("finest must be divisible by 4")
    lats = sample_lattices(spec, t, finest // 4, 3, midpoints=True)
    runs = [direct_from_lattice(lat, m_max) for lat in lats]
    return np.asarray(combine(runs, spec.local_shape, Stage.STAGE2))


@dataclass(frozen=True)
class OrderStudy:
    """Per-count proportional errors and order estimates for each stage."""

    m: np.ndarray
    raw_err: np.ndarray
    stage1_err: np.ndarray
    stage2_err: np.ndarray
    gamma_raw: np.ndarray
    gamma_stage1: np.ndarray
    gamma_stage2: np.ndarray
    aitken_err: np.ndarray

    COLUMNS = ("m", "raw_err", "stage1_err", "stage2_err", "gamma_raw", "gamma_stage1", "gamma_stage2")

    def rows(self):
        for i in range(len(self.m)):
            yield tuple(getattr(self, c)[i] for c in self.COLUMNS)

    def median_orders(self, m_min: int = 1) -> tuple[float, float, float]:
        sel = self.m >= m_min
        out = []
        for g in (self.gamma_raw, self.gamma_stage1, self.gamma_stage2):
            vals = g[sel]
            vals = vals[np.isfinite(vals)]
            out.append(float(np.median(vals)) if len(vals) else float("nan"))
        return tuple(out)


def order_study(
    spec: Distribution,
    t: float = 1.0,
    n_base: int = 32,
    m_max: int = 14,
    reference: np.ndarray | None = None,
) -> OrderStudy:
    """Errors at N steps and orders from runs at N..16N, against a fine reference."""
    if reference is None:
        reference = reference_probs(spec, t, m_max)
    lats = sample_lattices(spec, t, n_base, 5, midpoints=True)
    runs = [direct_from_lattice(lat, m_max) for lat in lats]
    rep = build_report(runs, spec.local_shape)
    ref = np.asarray(reference)[: m_max + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = lambda v: np.abs(v - ref) / np.abs(ref)  # noqa: E731
        aitken_vals = np.array([aitken(runs[0][i], runs[1][i], runs[2][i]).value for i in range(m_max + 1)])
    return OrderStudy(
        np.arange(m_max + 1),
        rel(runs[0]),
        rel(rep.stage1[0]),
        rel(rep.stage2[0]),
        np.atleast_1d(rep.orders["raw"]),
        np.atleast_1d(rep.orders["stage1"]),
        np.atleast_1d(rep.orders["stage2"]),
        rel(aitken_vals),
    )


def weibull_order_study(beta: float, alpha: float = 1.0, **kw) -> OrderStudy:
    return order_study(Weibull(alpha, beta), **kw)


# ---------------------------------------------------------------- timing


ENGINES = ("direct", "depril", "chain")


def _engine_call(engine: str, lat, m: int):
    if engine == "direct":
        return lambda: direct_from_lattice(lat, m)
    if engine == "depril":
        return lambda: depril_from_lattice(lat, m)
    if engine == "chain":
        return lambda: chain_from_lattice(lat, m)
    raise ValueError(f"unknown engine {engine!r}")


def time_engine(engine: str, spec: Distribution, m: int, n_steps: int, repetitions: int = 7,
                number: int = 20, t: float = 1.0) -> float:
    """Median over ``repetitions`` of the mean time of one engine call on a prepared grid.

    The grid (survival samples and cell masses) is built once outside the
    timed region, so the figure reflects the convolution work alone.
    """
    lat = sample_lattice(spec, t, n_steps)
    call = _engine_call(engine, lat, m)
    call()
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        for _ in range(number):
            call()
        samples.append((time.perf_counter() - t0) / number)
    return statistics.median(samples)


@dataclass(frozen=True)
class BenchRow:
    engine: str
    m: int
    n_steps: int
    seconds: float
    relative: float
    convolutions: int | None

    COLUMNS = ("engine", "m", "n_steps", "seconds", "relative", "convolutions")


def bench(engines, ms, ns, repetitions: int = 7, spec: Distribution | None = None) -> list[BenchRow]:
    """Timings for every (engine, m, N); ``relative`` is against the fastest row."""
    if not engines:
        raise ValueError("need at least one engine")
    spec = spec or Weibull(1.0, 1.2)
    raw = []
    for engine in engines:
        for n in ns:
            for m in ms:
                sec = time_engine(engine, spec, m, n, repetitions)
                conv = None
                if engine == "chain" and m >= 1:
                    conv = chain_convolution(np.ones(1), m)[1]
                raw.append((engine, m, n, sec, conv))
    fastest = min(r[3] for r in raw)
    return [BenchRow(e, m, n, s, s / fastest, c) for e, m, n, s, c in raw]


def richardson_exponents(beta: float) -> tuple[float, float, float]:
    return exponents_for(beta)
