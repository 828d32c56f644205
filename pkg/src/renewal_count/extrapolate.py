"""Richardson extrapolation over step doubling.

A discretized probability computed with N steps carries errors in powers of
the step h. For an inter-arrival cdf behaving like t^b near zero the two
leading powers are h^(b+1) (from the first cell, where the Taylor expansion
breaks down) and h^2 (midpoint rule elsewhere). Two Richardson steps over
runs at N, 2N and 4N remove both; a third step over a fourth run removes
h^(b+2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .results import ProbabilityVector, Stage

#: exponents used when the cdf is smooth at the origin (no t^b singularity)
CLASSICAL_EXPONENTS = (2.0, 4.0, 6.0)

_CONVERGED_FACTOR = 1e3 * np.finfo(float).eps


def richardson_step(coarse, fine, delta):
    """Combine estimates at h and h/2 to cancel an error term in h^delta."""
    if np.any(np.asarray(delta) <= 0):
        raise ValueError("delta must be positive")
    fine = np.asarray(fine, dtype=float)
    with np.errstate(over="ignore"):
        w = 2.0 ** np.asarray(delta, dtype=float)
    # (w fine - coarse) / (w - 1), written so that huge delta gives fine
    return fine + (fine - np.asarray(coarse, dtype=float)) / (w - 1.0)


def exponents_for(shape: float | None) -> tuple[float, float, float]:
    """Richardson exponents (first, second, third) for a local cdf power.

    The two leading error powers are ``shape + 1`` and 2; the smaller (the
    dominant error) is removed first. The final two-step result does not
    depend on this ordering. A cdf flatter than t^5 at the origin puts its
    term beyond h^6 and is treated as smooth.
    """
    if shape is None or shape + 1.0 > 6.0:
        return CLASSICAL_EXPONENTS
    first, second = sorted((shape + 1.0, 2.0))
    return first, second, shape + 2.0


def _values(v):
    return v.raw if isinstance(v, ProbabilityVector) else np.asarray(v, dtype=float)


def _check_runs(runs: Sequence) -> None:
    lengths = {np.shape(_values(r)) for r in runs}
    if len(lengths) != 1:
        raise ValueError(f"runs have different lengths: {sorted(lengths)}")
    pvs = [r for r in runs if isinstance(r, ProbabilityVector)]
    if not pvs:
        return
    if len(pvs) != len(runs):
        raise ValueError("cannot mix ProbabilityVector and plain arrays")
    if len({r.horizon for r in pvs}) != 1:
        raise ValueError("runs have different horizons")
    base = pvs[0].grid_steps
    for i, r in enumerate(pvs):
        if r.grid_steps != base * 2**i:
            raise ValueError("runs must use N, 2N, 4N, ... steps")


def _wrap(values, runs, stage):
    first = runs[0]
    if isinstance(first, ProbabilityVector):
        return ProbabilityVector(values, first.horizon, first.grid_steps, stage, first.engine)
    return values


def two_stage(a1, a2, a3, exponents: Sequence[float]):
    """Two Richardson steps over runs at N, 2N, 4N with the given exponents."""
    _check_runs([a1, a2, a3])
    g1, g2 = exponents[0], exponents[1]
    v1, v2, v3 = (_values(a) for a in (a1, a2, a3))
    b1 = richardson_step(v1, v2, g1)
    b2 = richardson_step(v2, v3, g1)
    return _wrap(richardson_step(b1, b2, g2), [a1, a2, a3], Stage.STAGE2)


def weibull_two_stage(a1, a2, a3, beta: float):
    """Remove the h^(beta+1) and h^2 errors from runs at N, 2N, 4N."""
    return two_stage(a1, a2, a3, exponents_for(beta))


def third_stage(*runs, shape: float | None):
    """Stage-two results on overlapping triples, then one more step at h^(b+2).

    Needs at least four runs at successive doublings; a fifth run is only
    useful for estimating the order of what remains.
    """
    if len(runs) < 4:
        raise ValueError("third stage needs runs at N, 2N, 4N and 8N")
    _check_runs(runs)
    g = exponents_for(shape)
    c1 = _values(two_stage(*runs[0:3], g))
    c2 = _values(two_stage(*runs[1:4], g))
    return _wrap(richardson_step(c1, c2, g[2]), runs, Stage.STAGE3)


def combine(runs: Sequence, shape: float | None, stage: Stage):
    """Apply ``stage`` to ``runs`` (needs ``stage.n_runs`` of them)."""
    stage = Stage(stage)
    if len(runs) < stage.n_runs:
        raise ValueError(f"{stage.value} needs {stage.n_runs} runs, got {len(runs)}")
    g = exponents_for(shape)
    if stage is Stage.RAW:
        return runs[0]
    if stage is Stage.STAGE1:
        _check_runs(runs[:2])
        return _wrap(richardson_step(_values(runs[0]), _values(runs[1]), g[0]), runs, Stage.STAGE1)
    if stage is Stage.STAGE2:
        return two_stage(*runs[:3], g)
    return third_stage(*runs[:4], shape=shape)


def estimate_order(s1, s2, s3):
    """Empirical error power from values at N, 2N, 4N steps.

    Returns ``log2((s2 - s1) / (s3 - s2))`` elementwise. Where the last
    difference is at rounding level the sequence counts as converged and
    the result is ``inf``; a non-positive ratio (sign change, noise) gives
    ``nan``.
    """
    s1, s2, s3 = (np.asarray(s, dtype=float) for s in (s1, s2, s3))
    d1 = s2 - s1
    d2 = s3 - s2
    converged = np.abs(d2) < _CONVERGED_FACTOR * np.abs(s3)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d1 / d2
        order = np.where(ratio > 0, np.log(np.abs(ratio)) / np.log(2.0), np.nan)
    order = np.where(converged, np.inf, order)
    return float(order) if order.ndim == 0 else order


class AitkenResult(NamedTuple):
    value: float
    degenerate: bool


def aitken(s1: float, s2: float, s3: float) -> AitkenResult:
    """Aitken delta-squared estimate from three successive values.

    Written as s1 - (s1 - s2)^2 / (s1 + s3 - 2 s2). A zero denominator
    returns s3 flagged as degenerate.
    """
    denom = s1 + s3 - 2.0 * s2
    if denom == 0.0 or not np.isfinite(denom):
        return AitkenResult(float(s3), True)
    return AitkenResult(float(s1 - (s1 - s2) ** 2 / denom), False)


@dataclass(frozen=True)
class ExtrapolationReport:
    """Runs at N, 2N, 4N (and more), every stage, and estimated orders.

    ``orders[stage]`` holds per-probability order estimates for that stage,
    computed from its values at N, 2N, 4N, which consumes runs up to
    16N for stage two.
    """

    raw: list[ProbabilityVector]
    stage1: list[np.ndarray]
    stage2: list[np.ndarray]
    exponents_used: tuple[float, float]
    orders: dict[str, np.ndarray]

    @property
    def result(self) -> np.ndarray:
        return self.stage2[0]


def build_report(runs: Sequence[ProbabilityVector], shape: float | None) -> ExtrapolationReport:
    _check_runs(runs)
    g = exponents_for(shape)
    vals = [_values(r) for r in runs]
    b = [richardson_step(vals[i], vals[i + 1], g[0]) for i in range(len(vals) - 1)]
    c = [richardson_step(b[i], b[i + 1], g[1]) for i in range(len(b) - 1)]
    orders = {}
    for name, seq in (("raw", vals), ("stage1", b), ("stage2", c)):
        if len(seq) >= 3:
            orders[name] = estimate_order(seq[0], seq[1], seq[2])
    return ExtrapolationReport(list(runs), b, c, (g[0], g[1]), orders)


def combined_shape(specs) -> float | None:
    """Smallest local cdf power among ``specs`` (None if all are smooth)."""
    shapes = [s.local_shape for s in specs if s.local_shape is not None]
    return min(shapes) if shapes else None


def extrapolated(specs, t: float, n_steps: int, stage, compute, midpoints: bool = True):
    """Run ``compute`` on lattices at N, 2N, ... and combine per ``stage``.

    ``compute`` receives one lattice per entry of ``specs`` (all with the same
    step count) and returns an array. Returns ``(values, runs)``.
    """
    from ._lattice import sample_lattices

    stage = Stage(stage)
    per_spec = [sample_lattices(s, t, n_steps, stage.n_runs, midpoints) for s in specs]
    runs = [np.asarray(compute(*lats), dtype=float) for lats in zip(*per_spec)]
    return np.asarray(combine(runs, combined_shape(specs), stage), dtype=float), runs
