"""Inter-arrival survival distributions.

Each family evaluates its lower and upper tails as a pair. The smaller tail
is computed directly and the other is its complement, so ``cdf + survival``
is exactly one in floating point and neither tail suffers cancellation.

Families and parametrizations (``t`` is time):

========== ===================== =========================================
family     parameters            survival S(t)
========== ===================== =========================================
exponential rate                 exp(-rate t)
weibull    alpha, beta           exp(-(alpha t)^beta)
gamma      shape, rate           Q(shape, rate t)
gengamma   mu, sigma, q          Prentice form, see :class:`GenGamma`
burr       alpha, beta, nu       (1 + (alpha t)^beta)^-nu
========== ===================== =========================================
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields
from typing import ClassVar

import numpy as np
from scipy.special import ndtr

from .special import gammainc_pair, gammainc_pair_ratio


class ParameterError(ValueError):
    """A distribution parameter is outside its domain."""


class SpecParseError(ValueError):
    """A distribution text spec could not be parsed."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")


def _balanced(f, s):
    # keep the smaller tail, take the other as its complement
    small_f = f <= s
    f = np.where(small_f, f, 1.0 - s)
    s = np.where(small_f, 1.0 - f, s)
    return f, s


def origin_power(b: float) -> float | None:
    """``b`` for a cdf rising like t^b, or None when that start is analytic.

    Families with a non-negative integer power here (Exponential, Weibull or
    Burr with integer beta, gamma with integer shape) have a cdf that is
    analytic at the origin, so the lattice error has no h^(b+1) term.
    """
    b = float(b)
    return None if b.is_integer() else b


def gengamma_origin_power(sigma: float, q: float) -> float | None:
    """Local cdf power of the generalized gamma, None where it is analytic.

    For q > 0, F(t) = P(1/q^2, c t^(q/sigma)) = t^(1/(q sigma)) times a
    power series in t^(q/sigma): analytic when both exponents are integers.
    For q <= 0 the cdf vanishes faster than any power.
    """
    if q <= 0:
        return None
    b = 1.0 / (q * sigma)
    if float(q / sigma).is_integer() and b.is_integer():
        return None
    return b


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ParameterError(f"{name} must be positive and finite, got {value}")
    return value


@dataclass(frozen=True)
class Distribution:
    """Base class: subclasses implement ``_tails`` for strictly positive t."""

    family: ClassVar[str] = ""

    def _tails(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def local_shape(self) -> float | None:
        """Power ``b`` with F(t) ~ c t^b near zero, or None if F is smooth there.

        Drives the choice of Richardson exponents.
        """
        return None

    def tails(self, t):
        """Return ``(cdf, survival)`` at ``t`` (scalar or array, t >= 0)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(np.isnan(t)):
            raise ValueError("time must be non-negative")
        lower = np.zeros(t.shape)
        upper = np.ones(t.shape)
        pos = t > 0
        if pos.any():
            lower[pos], upper[pos] = _balanced(*self._tails(t[pos]))
        if lower.ndim == 0:
            return float(lower), float(upper)
        return lower, upper

    def survival(self, t):
        return self.tails(t)[1]

    def cdf(self, t):
        return self.tails(t)[0]

    def params(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        body = ",".join(f"{k}={v:.17g}" for k, v in self.params().items())
        return f"{self.family}({body})"

    def __str__(self) -> str:
        body = ",".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.family}({body})"


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float
    family: ClassVar[str] = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    @property
    def local_shape(self):
        return None

    def _tails(self, t):
        x = self.rate * t
        return -np.expm1(-x), np.exp(-x)


@dataclass(frozen=True)
class Weibull(Distribution):
    """Weibull with rate-like scale: S(t) = exp(-(alpha t)^beta)."""

    alpha: float
    beta: float
    family: ClassVar[str] = "weibull"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _positive("beta", self.beta))

    @property
    def local_shape(self):
        return origin_power(self.beta)

    def _tails(self, t):
        # (alpha t)^beta through the log keeps accuracy for small beta;
        # beta = 1 skips the round trip so it matches the exponential exactly
        at = self.alpha * t
        with np.errstate(divide="ignore"):
            x = np.where(self.beta == 1.0, at, np.exp(self.beta * np.log(at)))
        return -np.expm1(-x), np.exp(-x)


@dataclass(frozen=True)
class Gamma(Distribution):
    shape: float
    rate: float
    family: ClassVar[str] = "gamma"

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    @property
    def local_shape(self):
        return origin_power(self.shape)

    def _tails(self, t):
        return gammainc_pair(self.shape, self.rate * t)


@dataclass(frozen=True)
class GenGamma(Distribution):
    """Generalized gamma in the Prentice (mu, sigma, q) parametrization.

    With ``z = (log t - mu) / sigma``, ``g = 1/q^2`` and ``u = g exp(q z)``:
    q > 0 gives S = 1 - P(g, u), q < 0 gives S = P(g, u), and q = 0 is the
    log-normal limit S = 1 - Phi(z). q = 1 reduces to Weibull with
    beta = 1/sigma and alpha = exp(-mu); q = sigma is a gamma distribution.
    """

    mu: float
    sigma: float
    q: float
    family: ClassVar[str] = "gengamma"

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))
        object.__setattr__(self, "q", float(self.q))
        if not (math.isfinite(self.mu) and math.isfinite(self.q)):
            raise ParameterError("mu and q must be finite")

    @property
    def local_shape(self):
        return gengamma_origin_power(self.sigma, self.q)

    def _tails(self, t):
        z = (np.log(t) - self.mu) / self.sigma
        q = np.asarray(self.q, dtype=float)
        if q.ndim == 0 and q == 0.0:
            return ndtr(z), ndtr(-z)
        # q may be an array when rows of a batch are evaluated together;
        # below 1e-100 the gamma shape 1/q^2 would overflow and the normal
        # limit is exact to far below rounding
        normal = np.abs(q) < 1e-100
        qs = np.where(normal, 1.0, q)
        g = 1.0 / qs**2
        # u = g exp(q z) = g (1 + d); passing d keeps small q accurate
        d = np.expm1(np.minimum(qs * z, 700.0))
        lower, upper = gammainc_pair_ratio(g, d)
        pos = qs > 0
        lower, upper = np.where(pos, lower, upper), np.where(pos, upper, lower)
        if np.any(normal):
            lower = np.where(normal, ndtr(z), lower)
            upper = np.where(normal, ndtr(-z), upper)
        return lower, upper

    @classmethod
    def from_stacy(cls, shape: float, scale: float, power: float) -> "GenGamma":
        """Convert from Stacy's form, density proportional to
        ``t^(shape*power - 1) exp(-(t/scale)^power)``.
        """
        shape = _positive("shape", shape)
        scale = _positive("scale", scale)
        power = _positive("power", power)
        q = 1.0 / math.sqrt(shape)
        sigma = q / power
        mu = math.log(scale) + math.log(shape) / power
        return cls(mu=mu, sigma=sigma, q=q)


@dataclass(frozen=True)
class BurrXII(Distribution):
    """Burr type XII: S(t) = (1 + (alpha t)^beta)^-nu.

    nu = 1 is log-logistic; nu -> infinity with alpha scaled by nu^(1/beta)
    tends to the Weibull.
    """

    alpha: float
    beta: float
    nu: float
    family: ClassVar[str] = "burr"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _positive("beta", self.beta))
        object.__setattr__(self, "nu", _positive("nu", self.nu))

    @property
    def local_shape(self):
        return origin_power(self.beta)

    def _tails(self, t):
        x = np.exp(self.beta * np.log(self.alpha * t))
        log_s = -self.nu * np.log1p(x)
        return -np.expm1(log_s), np.exp(log_s)


FAMILIES: dict[str, type[Distribution]] = {
    cls.family: cls for cls in (Exponential, Weibull, Gamma, GenGamma, BurrXII)
}
FAMILIES["burrxii"] = BurrXII

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*=\s*([^,()\s]+)\s*")


def parse_distribution(text: str) -> Distribution:
    """Parse ``family(name=value,...)``, e.g. ``weibull(alpha=2.64,beta=1.12)``."""
    m = re.match(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*\(", text)
    if not m:
        raise SpecParseError("expected 'family('", text, 0)
    name = m.group(1).lower()
    if name not in FAMILIES:
        raise SpecParseError(f"unknown family {name!r}", text, m.start(1))
    cls = FAMILIES[name]
    pos = m.end()
    kwargs: dict[str, float] = {}
    close = text.find(")", pos)
    if close < 0:
        raise SpecParseError("missing ')'", text, len(text))
    if text[close + 1:].strip():
        raise SpecParseError("trailing characters", text, close + 1)
    body_end = close
    while pos < body_end:
        tok = _TOKEN.match(text, pos, body_end)
        if not tok:
            raise SpecParseError("expected name=value", text, pos)
        key, raw = tok.group(1), tok.group(2)
        try:
            kwargs[key] = float(raw)
        except ValueError:
            raise SpecParseError(f"bad number {raw!r}", text, tok.start(2)) from None
        pos = tok.end()
        if pos < body_end:
            if text[pos] != ",":
                raise SpecParseError("expected ','", text, pos)
            pos += 1
    expected = {f.name for f in fields(cls)}
    if set(kwargs) != expected:
        raise SpecParseError(
            f"{name} needs parameters {sorted(expected)}, got {sorted(kwargs)}", text, m.end()
        )
    return cls(**kwargs)


def batch_tails(cls: type[Distribution], params: dict, t) -> tuple[np.ndarray, np.ndarray]:
    """``(cdf, survival)`` for R parameter rows at G times, shape (R, G).

    ``params`` maps each field of ``cls`` to a length-R array. Rows are
    validated by constructing each distinct row once.
    """
    names = [f.name for f in fields(cls)]
    cols = [np.asarray(params[k], dtype=float).ravel() for k in names]
    rows = len(cols[0])
    for row in set(zip(*cols)):
        cls(**dict(zip(names, row)))
    t = np.asarray(t, dtype=float).ravel()
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("time must be non-negative")
    inst = object.__new__(cls)
    for k, c in zip(names, cols):
        object.__setattr__(inst, k, c[:, None])
    lower = np.zeros((rows, len(t)))
    upper = np.ones((rows, len(t)))
    pos = t > 0
    if pos.any():
        f, s = inst._tails(t[None, pos])
        lower[:, pos], upper[:, pos] = _balanced(*np.broadcast_arrays(f, s))
    return lower, upper


def survival(spec: Distribution, t):
    return spec.survival(t)


def cdf(spec: Distribution, t):
    return spec.cdf(t)


@dataclass(frozen=True)
class DiscretizedGrid:
    """Cell masses ``increments[j-1] = F(j h) - F((j-1) h)`` for j = 1..N."""

    h: float
    n_steps: int
    increments: np.ndarray

    @property
    def horizon(self) -> float:
        return self.h * self.n_steps


def _increments(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    # difference whichever tail is small at the left edge of each cell
    d_lower = np.diff(lower)
    d_upper = -np.diff(upper)
    return np.maximum(np.where(upper[:-1] < 0.5, d_upper, d_lower), 0.0)


def discretize(spec: Distribution, t: float, n_steps: int) -> DiscretizedGrid:
    """Integrate the density analytically over N equal cells of [0, t]."""
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("n_steps must be a positive integer")
    if not t > 0:
        raise ValueError("horizon t must be positive")
    n_steps = int(n_steps)
    h = t / n_steps
    lower, upper = spec.tails(t * np.arange(n_steps + 1) / n_steps)
    return DiscretizedGrid(h=h, n_steps=n_steps, increments=_increments(lower, upper))
