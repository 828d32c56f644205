"""Row-vectorized De Pril evaluation for likelihoods.

Each row has its own parameters and its own count; all rows share the
family, the step count and the extrapolation exponents. The recursion runs
once over the step index with every row advanced together, which is what
makes regression likelihoods affordable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depril import _BAND, _RESIDUAL, chain_convolution
from .distributions import Distribution, _increments, batch_tails
from .extrapolate import combine
from .results import Stage


@dataclass(frozen=True)
class BatchLattice:
    n_steps: int
    node_survival: np.ndarray  # (R, N + 1)
    mid_survival: np.ndarray  # (R, N)
    q: np.ndarray  # (R, N)


def batch_lattices(cls: type[Distribution], params: dict, t: float, n_base: int, levels: int):
    n_top = n_base * 2 ** (levels - 1)
    n_fine = 2 * n_top
    lower, upper = batch_tails(cls, params, t * np.arange(n_fine + 1) / n_fine)
    out = []
    for i in range(levels):
        n = n_base * 2**i
        stride = n_fine // n
        lo = lower[:, ::stride]
        up = upper[:, ::stride]
        q = np.maximum(np.where(up[:, :-1] < 0.5, -np.diff(up, axis=1), np.diff(lo, axis=1)), 0.0)
        out.append(BatchLattice(n, up, upper[:, stride // 2::stride], q))
    return out


def _recursion_rows(q0: np.ndarray, qp: np.ndarray, m: np.ndarray, length: int) -> np.ndarray:
    """De Pril's recursion for every row, order m >= 0 per row, q0 > 0."""
    rows = qp.shape[0]
    f = np.zeros((rows, length))
    with np.errstate(under="ignore"):
        f[:, 0] = q0 ** m
    with np.errstate(over="ignore"):
        inv_q0 = 1.0 / q0
    jq = np.arange(1, length) * qp[:, 1:]
    mp1 = (m + 1).astype(float)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, length):
            fr = f[:, n - 1::-1]
            a = np.einsum("ij,ij->i", jq[:, :n], fr)
            b = np.einsum("ij,ij->i", qp[:, 1:n + 1], fr)
            f[:, n] = (mp1 / n * a - b) * inv_q0
    return f


def depril_rows(q: np.ndarray, m: np.ndarray, length: int) -> np.ndarray:
    """m-fold convolution of every row of ``q`` with row-specific order ``m >= 1``.

    Leading zero cells are shifted out per row. Each row is checked as in
    :func:`depril_convolution`; rows where the recursion is unreliable are
    recomputed with the addition chain instead.
    """
    rows = q.shape[0]
    f = np.zeros((rows, length))
    if length == 0 or rows == 0:
        return f
    # shift out k leading zeros per row; the result moves by m k places
    nz = q > 0
    k = np.where(nz.any(axis=1), nz.argmax(axis=1), q.shape[1])
    cols = np.arange(q.shape[1])[None, :] + k[:, None]
    qs = np.where(cols < q.shape[1], np.take_along_axis(q, np.minimum(cols, q.shape[1] - 1), axis=1), 0.0)
    qp = np.zeros((rows, length))
    kk = min(qs.shape[1], length)
    qp[:, :kk] = qs[:, :kk]
    live = (qp[:, 0] > 0) & (m * k < length)
    if live.any():
        ql, ml = qp[live], m[live]
        # orders m and m - 1 in one pass; order 0 comes out as the unit mass
        both = _recursion_rows(np.tile(ql[:, 0], 2), np.vstack([ql, ql]), np.concatenate([ml, ml - 1]), length)
        fl, prev = both[: len(ml)], both[len(ml):]
        with np.errstate(over="ignore", invalid="ignore"):
            residual = np.abs(convolve_rows(prev, ql, length) - fl).sum(axis=1)
            good = (
                np.all(np.isfinite(fl), axis=1)
                & (fl.min(axis=1) >= -_BAND)
                & (fl.max(axis=1) <= 1.0 + _BAND)
                & (residual <= _RESIDUAL)
            )
        for i in np.flatnonzero(~good):
            fl[i] = chain_convolution(ql[i], int(ml[i]))[0][:length]
        f[live] = fl
    shift = m * k
    if np.any(shift > 0):
        src = np.arange(length)[None, :] - shift[:, None]
        f = np.where(src >= 0, np.take_along_axis(f, np.clip(src, 0, length - 1), axis=1), 0.0)
    return f


def convolve_rows(a: np.ndarray, b: np.ndarray, length: int) -> np.ndarray:
    out = np.empty((a.shape[0], length))
    for k in range(length):
        out[:, k] = np.einsum("ij,ij->i", a[:, : k + 1], b[:, k::-1])
    return out


def _weights(m: np.ndarray, n: int, length: int):
    """Per-row survival index and weight for the final integral.

    Even m reads node survival at n - J - m/2 (half weight where that is 0);
    odd m reads midpoint survival at n - 1 - J - (m-1)/2.
    """
    J = np.arange(length)[None, :]
    even = (m % 2 == 0)[:, None]
    half = (m // 2)[:, None]
    idx = np.where(even, n - J - half, n - 1 - J - half)
    w = (idx >= 0).astype(float)
    w = np.where(even & (idx == 0), 0.5, w)
    return np.maximum(idx, 0), w, even


def final_rows(mass: np.ndarray, m: np.ndarray, lat: BatchLattice) -> np.ndarray:
    n = lat.n_steps
    length = mass.shape[1]
    idx, w, even = _weights(m, n, length)
    node = np.take_along_axis(lat.node_survival, np.minimum(idx, n), axis=1)
    mid = np.take_along_axis(lat.mid_survival, np.minimum(idx, n - 1), axis=1)
    surv = np.where(even, node, mid)
    return np.einsum("ij,ij->i", mass, w * surv)


def below_rows(mass: np.ndarray, m: np.ndarray, n: int) -> np.ndarray:
    _, w, _ = _weights(m, n, mass.shape[1])
    return np.einsum("ij,ij->i", mass, w)


def _run(lat: BatchLattice, m: np.ndarray, censored: np.ndarray, first: BatchLattice | None):
    n = lat.n_steps
    rows = len(m)
    out = np.zeros(rows)
    zero = m == 0
    if first is None:
        out[zero] = lat.node_survival[zero, n]
    else:
        out[zero] = first.node_survival[zero, n]
    active = ~zero & (n - (m + 1) // 2 >= 0)
    if not active.any():
        return out
    ma = m[active]
    length = int(n - (ma.min() + 1) // 2 + 1)
    q = lat.q[active]
    if first is None:
        mass = depril_rows(q, ma, length)
    else:
        qf = first.q[active][:, :length]
        mass = qf.copy()
        deep = ma >= 2
        if deep.any():
            tail = depril_rows(q[deep], ma[deep] - 1, length)
            mass[deep] = convolve_rows(qf[deep], tail, length)
    pos = np.empty(len(ma))
    cens = censored[active]
    if (~cens).any():
        sub = BatchLattice(n, lat.node_survival[active][~cens], lat.mid_survival[active][~cens], None)
        pos[~cens] = final_rows(mass[~cens], ma[~cens], sub)
    if cens.any():
        pos[cens] = below_rows(mass[cens], ma[cens], n)
    out[active] = pos
    return out


def batch_probs(
    cls: type[Distribution],
    params: dict,
    counts,
    censored=None,
    t: float = 1.0,
    n_steps: int = 24,
    stage=Stage.STAGE2,
    shape: float | None = None,
    first_params: dict | None = None,
) -> np.ndarray:
    """P_{count}(t) per row (or P(N_t >= count) where ``censored``).

    ``first_params`` switches to a delayed process whose first gap has the
    same family with those parameters. ``shape`` picks the Richardson
    exponents, as for the single-row engines.
    """
    stage = Stage(stage)
    m = np.asarray(counts, dtype=np.int64).ravel()
    cens = np.zeros(len(m), dtype=bool) if censored is None else np.asarray(censored, dtype=bool).ravel()
    # a censored count of zero is certain
    trivial = cens & (m == 0)
    lats = batch_lattices(cls, params, t, n_steps, stage.n_runs)
    firsts = (
        batch_lattices(cls, first_params, t, n_steps, stage.n_runs)
        if first_params is not None
        else [None] * len(lats)
    )
    runs = []
    for lat, fl in zip(lats, firsts):
        vals = _run(lat, m, cens & ~trivial, fl)
        vals[trivial] = 1.0
        runs.append(vals)
    return np.asarray(combine(runs, shape, stage), dtype=float)
