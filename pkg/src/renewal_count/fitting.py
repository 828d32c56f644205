"""Maximum likelihood for renewal count models.

Every observation is a count over a window of length one. Its inter-arrival
distribution comes from a family with shared shape parameters and a scale
driven by a linear predictor ``eta = x'gamma``:

=========== ===================================== ==========================
family      distribution                          reported scale (no covars)
=========== ===================================== ==========================
poisson     exponential, rate exp(eta)            exp(eta)
weibull     S(t) = exp(-exp(eta) t^beta)          exp(eta)
gamma       shape k, rate exp(eta)                exp(-eta) (gamma scale)
gengamma    mu = eta, sigma, q                    exp(mu)
burr        S(t) = (1 + exp(eta) t^beta / nu)^-nu exp(eta)
=========== ===================================== ==========================

For the Weibull and Burr families exp(eta) multiplies t^beta, so the usual
rate-type scale is alpha = exp(eta / beta). With ``hurdle=True`` the first
event gets its own coefficient vector (same covariates, same shapes).

Probabilities come from the row-vectorized De Pril engine with stage-two
extrapolation; censored rows ("at least this many") use the integrated
density directly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from ._batch import batch_probs
from .direct import STEPS_EXTRAPOLATED, all_probs
from .distributions import (
    BurrXII,
    Distribution,
    Exponential,
    Gamma,
    GenGamma,
    Weibull,
    gengamma_origin_power,
    origin_power,
)
from .modified import ModifiedSpec, modified_all_probs
from .results import ProbabilityVector, Stage

UNDERFLOW = 1e-300


class DataError(ValueError):
    """Malformed count data; the message names the row and column."""


class NestingError(ValueError):
    """The restricted model fits better than the full one."""


class InsufficientCellsError(ValueError):
    """Too few cells left after merging for a chi-squared test."""


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class CountData:
    """Counts with optional covariates and censoring flags.

    ``censored[i]`` means observation i recorded "at least counts[i]".
    """

    counts: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple[str, ...] = ()
    censored: np.ndarray | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or len(counts) == 0:
            raise DataError("need a non-empty 1-d array of counts")
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise DataError("counts must be non-negative integers")
        x = np.asarray(self.covariates, dtype=float).reshape(len(counts), -1)
        if x.shape[1] != len(self.covariate_names):
            raise DataError("covariate columns and names differ in number")
        cens = np.zeros(len(counts), bool) if self.censored is None else np.asarray(self.censored, bool)
        if cens.shape != counts.shape:
            raise DataError("censored flags must match the counts")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        object.__setattr__(self, "censored", cens)

    @property
    def n(self) -> int:
        return len(self.counts)

    @classmethod
    def from_counts(cls, counts, censored=None) -> "CountData":
        counts = np.asarray(counts)
        return cls(counts, np.zeros((len(counts), 0)), (), censored)

    @classmethod
    def from_frequencies(cls, frequencies) -> "CountData":
        """Intercept-only data with ``frequencies[m]`` observations of count m."""
        freq = np.asarray(frequencies, dtype=np.int64)
        return cls.from_counts(np.repeat(np.arange(len(freq)), freq))

    @classmethod
    def from_csv(
        cls, path, count_column: str = "count", censored_column: str = "censored"
    ) -> "CountData":
        """Read a CSV with a header row.

        ``count_column`` holds the counts, the optional ``censored_column``
        holds 0/1 flags and every other column is a numeric covariate.
        """
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if count_column not in header:
                raise DataError(f"{path}: missing count column {count_column!r}")
            ic = header.index(count_column)
            icens = header.index(censored_column) if censored_column in header else None
            cov_idx = [i for i in range(len(header)) if i not in (ic, icens)]
            counts, cens, rows = [], [], []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")

                def num(i):
                    try:
                        return float(row[i])
                    except ValueError:
                        raise DataError(
                            f"{path}: row {lineno}, column {header[i]!r}: not a number: {row[i]!r}"
                        ) from None

                c = num(ic)
                if c < 0 or c != int(c):
                    raise DataError(f"{path}: row {lineno}, column {count_column!r}: bad count {row[ic]!r}")
                counts.append(int(c))
                if icens is not None:
                    flag = num(icens)
                    if flag not in (0.0, 1.0):
                        raise DataError(f"{path}: row {lineno}, column {censored_column!r}: expected 0 or 1")
                    cens.append(bool(flag))
                rows.append([num(i) for i in cov_idx])
        if not counts:
            raise DataError(f"{path}: no data rows")
        x = np.array(rows, dtype=float).reshape(len(counts), len(cov_idx))
        return cls(np.array(counts), x, tuple(header[i] for i in cov_idx), np.array(cens) if cens else None)

    def design(self, names: Sequence[str]) -> np.ndarray:
        """Design matrix: a column of ones followed by the named covariates."""
        cols = [np.ones(self.n)]
        for name in names:
            if name not in self.covariate_names:
                raise DataError(f"unknown covariate {name!r}")
            cols.append(self.covariates[:, self.covariate_names.index(name)])
        return np.column_stack(cols)

    def frequencies(self) -> np.ndarray:
        return np.bincount(self.counts)

    @cached_property
    def grouped(self) -> tuple["CountData", np.ndarray]:
        """Distinct (count, censored, covariates) rows and their multiplicities."""
        key = np.column_stack([self.counts, self.censored, self.covariates])
        rows, inverse = np.unique(key, axis=0, return_inverse=True)
        weights = np.bincount(inverse.ravel(), minlength=len(rows)).astype(float)
        distinct = CountData(rows[:, 0], rows[:, 2:], self.covariate_names, rows[:, 1] != 0)
        return distinct, weights


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class _Family:
    name: str
    cls: type[Distribution]
    shape_names: tuple[str, ...]
    # unconstrained <-> natural for the shape parameters
    to_natural: Callable[[np.ndarray], np.ndarray]
    to_free: Callable[[np.ndarray], np.ndarray]
    build: Callable[[np.ndarray, np.ndarray], dict]
    local_shape: Callable[[np.ndarray], float | None]
    scale: Callable[[float], float]
    start: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def _weibull_build(eta, s):
    beta = s[0]
    return {"alpha": np.exp(eta / beta), "beta": np.full_like(eta, beta)}


def _burr_build(eta, s):
    beta, nu = s
    return {
        "alpha": np.exp((eta - math.log(nu)) / beta),
        "beta": np.full_like(eta, beta),
        "nu": np.full_like(eta, nu),
    }


def _gg_shape(s):
    return gengamma_origin_power(*s)


def _power(s):
    return origin_power(s[0])


FAMILY_MODELS: dict[str, _Family] = {
    "poisson": _Family(
        "poisson", Exponential, (),
        lambda f: f, lambda s: s,
        lambda eta, s: {"rate": np.exp(eta)},
        lambda s: None, math.exp,
        lambda g: (g, np.array([])),
    ),
    "weibull": _Family(
        "weibull", Weibull, ("beta",),
        np.exp, np.log,
        _weibull_build,
        _power, math.exp,
        lambda g: (g, np.array([1.0])),
    ),
    "gamma": _Family(
        "gamma", Gamma, ("shape",),
        np.exp, np.log,
        lambda eta, s: {"shape": np.full_like(eta, s[0]), "rate": np.exp(eta)},
        _power, lambda e: math.exp(-e),
        lambda g: (g, np.array([1.0])),
    ),
    "gengamma": _Family(
        "gengamma", GenGamma, ("sigma", "q"),
        lambda f: np.array([math.exp(f[0]), f[1]]), lambda s: np.array([math.log(s[0]), s[1]]),
        lambda eta, s: {"mu": eta, "sigma": np.full_like(eta, s[0]), "q": np.full_like(eta, s[1])},
        _gg_shape, math.exp,
        # q = 1, sigma = 1 is the exponential with rate exp(-mu)
        lambda g: (-g, np.array([1.0, 1.0])),
    ),
    "burr": _Family(
        "burr", BurrXII, ("beta", "nu"),
        np.exp, np.log,
        _burr_build,
        _power, math.exp,
        lambda g: (g, np.array([1.0, 10.0])),
    ),
}


@dataclass(frozen=True)
class ModelSpec:
    """Family, covariates entering the scale, and the hurdle switch."""

    family: str
    covariates: tuple[str, ...] = ()
    hurdle: bool = False
    n_steps: int = STEPS_EXTRAPOLATED
    extrapolation: Stage = Stage.STAGE2

    def __post_init__(self):
        if self.family not in FAMILY_MODELS:
            raise ValueError(f"unknown family {self.family!r}; choose from {sorted(FAMILY_MODELS)}")
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "extrapolation", Stage(self.extrapolation))

    @property
    def fam(self) -> _Family:
        return FAMILY_MODELS[self.family]

    def coef_names(self) -> list[str]:
        base = ["(intercept)", *self.covariates]
        names = list(base)
        if self.hurdle:
            names += [f"first:{b}" for b in base]
        return names + list(self.fam.shape_names)

    def n_params(self) -> int:
        return len(self.coef_names())

    def split(self, theta):
        """Split natural parameters into (gamma, gamma_first or None, shapes)."""
        theta = np.asarray(theta, dtype=float)
        p = 1 + len(self.covariates)
        g = theta[:p]
        gf = theta[p:2 * p] if self.hurdle else None
        shapes = theta[(2 * p if self.hurdle else p):]
        if len(shapes) != len(self.fam.shape_names):
            raise ValueError(f"expected {self.n_params()} parameters, got {len(theta)}")
        return g, gf, shapes

    def distribution(self, theta, x=None, first: bool = False) -> Distribution:
        """Inter-arrival distribution at one covariate vector (without the intercept)."""
        g, gf, shapes = self.split(theta)
        coef = gf if (first and gf is not None) else g
        xv = np.concatenate([[1.0], np.asarray(x if x is not None else [], dtype=float)])
        eta = np.array([float(xv @ coef)])
        params = self.fam.build(eta, shapes)
        return self.fam.cls(**{k: float(v[0]) for k, v in params.items()})


# ---------------------------------------------------------------- likelihood


class _ProbabilityCache:
    """Row probabilities keyed on (count, censored, eta, eta_first, shapes) at 12 digits."""

    def __init__(self, limit: int = 200_000):
        self.store: dict = {}
        self.limit = limit

    @staticmethod
    def _q(v):
        return float(f"{v:.12g}")

    def lookup(self, model: ModelSpec, eta, eta_first, shapes, counts, censored):
        fam = model.fam
        sh = tuple(self._q(s) for s in shapes)
        keys = [
            (int(c), bool(z), self._q(e), None if ef is None else self._q(ef), sh)
            for c, z, e, ef in zip(
                counts, censored, eta, eta_first if eta_first is not None else [None] * len(eta)
            )
        ]
        missing = sorted({k for k in keys if k not in self.store})
        if missing:
            m = np.array([k[0] for k in missing])
            cz = np.array([k[1] for k in missing])
            e = np.array([k[2] for k in missing])
            params = fam.build(e, shapes)
            first = None
            ls = fam.local_shape(shapes)
            if eta_first is not None:
                first = fam.build(np.array([k[3] for k in missing]), shapes)
            vals = batch_probs(
                fam.cls, params, m, cz, 1.0, model.n_steps, model.extrapolation, ls, first
            )
            if len(self.store) + len(missing) > self.limit:
                # evict everything this call does not need
                self.store = {k: self.store[k] for k in set(keys) if k in self.store}
            self.store.update(zip(missing, vals))
        return np.array([self.store[k] for k in keys])


def _row_probs(model: ModelSpec, theta, data: CountData, cache: _ProbabilityCache | None = None):
    g, gf, shapes = model.split(theta)
    x = data.design(model.covariates)
    eta = x @ g
    eta_first = x @ gf if gf is not None else None
    cache = cache or _ProbabilityCache()
    return cache.lookup(model, eta, eta_first, shapes, data.counts, data.censored)


def log_likelihood(model: ModelSpec, theta, data: CountData, cache=None) -> float:
    """Sum of log P(count_i) at natural parameters ``theta``.

    ``theta`` lists the scale coefficients (intercept first), the first-event
    coefficients when ``model.hurdle``, then the family's shapes (see
    :meth:`ModelSpec.coef_names`). A probability below 1e-300, or one that
    extrapolation pushed non-positive, makes the result ``-inf``.
    """
    distinct, weights = data.grouped
    try:
        # extreme optimizer trial points overflow harmlessly to -inf
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            p = _row_probs(model, theta, distinct, cache)
    except (ValueError, ArithmeticError, FloatingPointError):
        return -math.inf
    if not np.all(p > UNDERFLOW):
        return -math.inf
    return float(np.dot(weights, np.log(p)))


# ---------------------------------------------------------------- fitting


@dataclass
class OptimizerConfig:
    simplex_maxiter: int = 2000
    quasi_newton_maxiter: int = 200
    tol: float = 1e-8
    hessian_step: float = 1e-4


@dataclass
class FitResult:
    model: ModelSpec
    names: list[str]
    estimates: np.ndarray
    std_errors: np.ndarray | None
    log_likelihood: float
    n_obs: int
    converged: bool
    message: str = ""
    n_evaluations: int = 0
    expected: np.ndarray | None = field(default=None, repr=False)
    observed: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_params(self) -> int:
        return len(self.estimates)

    @property
    def aic(self) -> float:
        return -2.0 * self.log_likelihood + 2.0 * self.n_params

    @property
    def bic(self) -> float:
        return -2.0 * self.log_likelihood + self.n_params * math.log(self.n_obs)

    def coef(self, name: str) -> float:
        return float(self.estimates[self.names.index(name)])

    def se(self, name: str) -> float | None:
        if self.std_errors is None:
            return None
        v = self.std_errors[self.names.index(name)]
        return float(v) if np.isfinite(v) else None

    @property
    def scale(self) -> float:
        """The family's reported scale from the intercept (see module table)."""
        return self.model.fam.scale(self.coef("(intercept)"))

    def to_dict(self) -> dict:
        out = {
            "family": self.model.family,
            "covariates": list(self.model.covariates),
            "hurdle": self.model.hurdle,
            "coefficients": [
                {"name": n, "estimate": float(v), "std_error": self.se(n)}
                for n, v in zip(self.names, self.estimates)
            ],
            "scale": self.scale,
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "bic": self.bic,
            "n_obs": self.n_obs,
            "n_params": self.n_params,
            "converged": self.converged,
            "message": self.message,
            "n_evaluations": self.n_evaluations,
        }
        if self.expected is not None:
            out["frequencies"] = [
                {"count": i, "observed": int(o), "expected": float(e)}
                for i, (o, e) in enumerate(zip(self.observed, self.expected))
            ]
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _poisson_start(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Poisson regression by iteratively reweighted least squares."""
    g = np.zeros(x.shape[1])
    g[0] = math.log(max(y.mean(), 1e-3))
    for _ in range(50):
        mu = np.exp(np.clip(x @ g, -30, 30))
        z = x @ g + (y - mu) / mu
        w = mu
        xtw = x.T * w
        step = np.linalg.lstsq(xtw @ x, xtw @ z, rcond=None)[0]
        if np.max(np.abs(step - g)) < 1e-12:
            g = step
            break
        g = step
    return g


def _to_free(model: ModelSpec, theta):
    g, gf, s = model.split(theta)
    parts = [g] + ([gf] if gf is not None else []) + [model.fam.to_free(s)]
    return np.concatenate(parts)


def _to_natural(model: ModelSpec, phi):
    k = len(model.fam.shape_names)
    head, s = phi[: len(phi) - k], phi[len(phi) - k:]
    return np.concatenate([head, model.fam.to_natural(s)])


def start_values(model: ModelSpec, data: CountData) -> np.ndarray:
    x = data.design(model.covariates)
    g, shapes = model.fam.start(_poisson_start(x, data.counts.astype(float)))
    parts = [g, g] if model.hurdle else [g]
    return np.concatenate(parts + [shapes])


def numerical_hessian(f: Callable[[np.ndarray], float], x: np.ndarray, rel_step: float = 1e-4):
    """Central-difference Hessian of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    k = len(x)
    h = rel_step * np.maximum(1.0, np.abs(x))
    f0 = f(x)
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = v
    return hess


def standard_errors(hess_negll: np.ndarray) -> np.ndarray | None:
    """Square roots of the inverse Hessian diagonal, or None if not positive definite."""
    if not np.all(np.isfinite(hess_negll)):
        return None
    try:
        np.linalg.cholesky(hess_negll)
    except np.linalg.LinAlgError:
        return None
    return np.sqrt(np.diag(np.linalg.inv(hess_negll)))


def fit(
    model: ModelSpec,
    data: CountData,
    config: OptimizerConfig | None = None,
    start: np.ndarray | None = None,
) -> FitResult:
    """Maximize the likelihood: simplex search, then BFGS, both deterministic.

    Shapes are optimized on the log scale; standard errors come from the
    central-difference Hessian in the natural parameters.
    """
    config = config or OptimizerConfig()
    cache = _ProbabilityCache()
    n_eval = 0

    def negll_nat(theta):
        nonlocal n_eval
        n_eval += 1
        return -log_likelihood(model, theta, data, cache)

    def objective(phi):
        v = negll_nat(_to_natural(model, phi))
        return v if math.isfinite(v) else 1e300

    theta0 = np.asarray(start if start is not None else start_values(model, data), dtype=float)
    phi0 = _to_free(model, theta0)
    if not math.isfinite(objective(phi0)):
        raise ArithmeticError("log-likelihood is not finite at the starting values")
    res1 = optimize.minimize(
        objective, phi0, method="Nelder-Mead",
        options={"maxiter": config.simplex_maxiter * len(phi0), "xatol": 1e-7, "fatol": config.tol,
                 "adaptive": len(phi0) > 3},
    )
    res2 = optimize.minimize(
        objective, res1.x, method="BFGS",
        options={"maxiter": config.quasi_newton_maxiter, "gtol": 1e-5},
    )
    best = res2 if res2.fun <= res1.fun else res1
    theta = _to_natural(model, best.x)
    ll = -negll_nat(theta)
    # BFGS often stops on precision loss with the numerical gradient; accept
    # when the simplex converged and BFGS did not move the likelihood
    converged = bool(res1.success or res2.success or abs(res2.fun - res1.fun) < 1e-6)
    message = f"simplex: {res1.message}; quasi-Newton: {res2.message}"
    hess = numerical_hessian(negll_nat, theta, config.hessian_step)
    se = standard_errors(hess)
    result = FitResult(model, model.coef_names(), theta, se, ll, data.n, converged, message, n_eval)
    result.observed = data.frequencies()
    result.expected = expected_frequencies(result, data, len(result.observed) - 1)
    return result


# ---------------------------------------------------------------- tests


def lr_test(restricted: FitResult, full: FitResult) -> tuple[float, int, float]:
    """Likelihood-ratio statistic 2 (ll_full - ll_restricted), df and p-value."""
    stat = 2.0 * (full.log_likelihood - restricted.log_likelihood)
    df = full.n_params - restricted.n_params
    if df == 0 and abs(stat) <= 1e-6:
        # the same model fitted twice
        return 0.0, 0, 1.0
    if df < 1:
        raise NestingError("full model must have more parameters than the restricted one")
    if stat < -1e-6:
        raise NestingError(f"restricted model fits better (statistic {stat:.6g})")
    stat = max(stat, 0.0)
    return stat, df, float(stats.chi2.sf(stat, df))


def predict_pmf(fit_result: FitResult, covariates=None, m_max: int = 10) -> ProbabilityVector:
    """P_0..P_{m_max} at one covariate vector (intercept excluded)."""
    model = fit_result.model
    rest = model.distribution(fit_result.estimates, covariates)
    if model.hurdle:
        first = model.distribution(fit_result.estimates, covariates, first=True)
        return modified_all_probs(ModifiedSpec(first, rest), 1.0, m_max, model.n_steps, model.extrapolation)
    return all_probs(rest, 1.0, m_max, model.n_steps, model.extrapolation)


def expected_frequencies(fit_result: FitResult, data: CountData, m_max: int) -> np.ndarray:
    """Expected numbers of observations with count 0..m_max-1, and m_max or more."""
    model = fit_result.model
    g, gf, shapes = model.split(fit_result.estimates)
    x = data.design(model.covariates)
    # identical rows (always so without covariates) share one pmf
    rows, inverse = np.unique(x, axis=0, return_inverse=True)
    weights = np.bincount(inverse.ravel(), minlength=len(rows))
    total = np.zeros(m_max + 1)
    for row, w in zip(rows, weights):
        pmf = predict_pmf(fit_result, row[1:], max(m_max - 1, 0)).probs
        cells = np.append(pmf, max(0.0, 1.0 - pmf.sum()))[: m_max + 1]
        if m_max == 0:
            cells = np.array([1.0])
        total += w * cells
    return total


def _merge_right(observed, expected, min_expected):
    obs, exp = list(observed), list(expected)
    while len(exp) > 1 and exp[-1] < min_expected:
        e, o = exp.pop(), obs.pop()
        exp[-1] += e
        obs[-1] += o
    return np.array(obs, dtype=float), np.array(exp, dtype=float)


def gof_chisq(
    fit_result: FitResult, data: CountData, min_expected: float = 5.0
) -> tuple[float, int, float]:
    """Pearson chi-squared over count cells, merging from the right.

    The last cell collects the tail (that count or more); it is folded into
    its neighbour until its expected number reaches ``min_expected``.
    Degrees of freedom are cells - 1 - number of fitted parameters.
    """
    observed = data.frequencies()
    m_max = len(observed) - 1
    expected = expected_frequencies(fit_result, data, m_max)
    obs, exp = _merge_right(observed, expected, min_expected)
    df = len(exp) - 1 - fit_result.n_params
    if df < 1:
        raise InsufficientCellsError(f"{len(exp)} cells leave no degrees of freedom")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return stat, df, float(stats.chi2.sf(stat, df))
