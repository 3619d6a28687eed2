"""Weibull family, the alternative laws of the power study, and special functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import special

from .errors import NonPositiveData, SampleUnderflow
from .rng import RngStream

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def erf(x):
    """Error function, odd in ``x``."""
    if np.ndim(x) == 0:
        return math.erf(float(x))
    return special.erf(np.asarray(x, dtype=np.float64))


def erfcx(x):
    """Scaled complementary error function ``exp(x**2) * (1 - erf(x))`` for ``x >= 0``.

    Stays finite where the unscaled product over- or underflows; behaves like
    ``1 / (x * sqrt(pi))`` for large ``x``.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("erfcx is defined here for x >= 0 only")
    out = special.erfcx(arr)
    return float(out) if np.ndim(x) == 0 else out


def as_sample(values) -> np.ndarray:
    """Validate observations: a nonempty 1-D array of finite, strictly positive floats."""
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise NonPositiveData("sample is empty")
    bad = ~(np.isfinite(x) & (x > 0))
    if bad.any():
        raise NonPositiveData(f"observation {x[bad][0]!r} is not a finite positive number")
    return x


def _check_x(x):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise NonPositiveData("densities are evaluated on x > 0 only")
    return arr


def _ret(x, value):
    return float(value) if np.ndim(x) == 0 else value


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")


def _log_standard_gamma(gen: np.random.Generator, shape: float, n: int) -> np.ndarray:
    # Below shape 1 the draw is G1 * U**(1/shape) with G1 ~ Gamma(shape + 1),
    # assembled in log space so tiny shapes cannot round to exact zeros.
    if shape >= 1.0:
        return np.log(gen.standard_gamma(shape, n))
    g1 = gen.standard_gamma(shape + 1.0, n)
    u = gen.random(n)
    return np.log(g1) + np.log1p(-u) / shape


def _finish(x: np.ndarray, label: str) -> np.ndarray:
    if not np.all(np.isfinite(x) & (x > 0)):
        raise SampleUnderflow(f"{label}: a draw left the positive double range")
    return x


@dataclass(frozen=True)
class WeibullParams:
    """Scale ``lam`` and shape ``k`` of W(lam, k)."""

    lam: float
    k: float

    def __post_init__(self):
        _positive("lam", self.lam)
        _positive("k", self.k)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "k", float(self.k))


class Alternative:
    """Shared behaviour of the data-generating laws.  Subclasses define
    ``logpdf`` on positive arrays and ``_draw``."""

    family: ClassVar[str]

    def pdf(self, x):
        arr = _check_x(x)
        return _ret(x, np.exp(self.logpdf(arr)))

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        if int(n) < 1:
            raise ValueError("n must be >= 1")
        return _finish(self._draw(int(n), rng), self.label)

    @property
    def label(self) -> str:
        args = ",".join(f"{v:g}" for v in self.__dict__.values())
        return f"{self.family}({args})"


@dataclass(frozen=True)
class Weibull(Alternative):
    lam: float
    k: float
    family: ClassVar[str] = "W"

    def __post_init__(self):
        WeibullParams(self.lam, self.k)

    @property
    def params(self) -> WeibullParams:
        return WeibullParams(self.lam, self.k)

    def logpdf(self, x):
        z = x / self.lam
        return math.log(self.k / self.lam) + (self.k - 1.0) * np.log(z) - z**self.k

    def _draw(self, n, rng):
        # same transform as the bootstrap kernels, so replicates are reproducible here
        return self.lam * np.power(-np.log(rng.uniforms(n)), 1.0 / self.k)


@dataclass(frozen=True)
class Gamma(Alternative):
    a: float
    s: float
    family: ClassVar[str] = "G"

    def __post_init__(self):
        _positive("a", self.a)
        _positive("s", self.s)

    def logpdf(self, x):
        return (self.a - 1.0) * np.log(x) - x / self.s - self.a * math.log(self.s) - math.lgamma(self.a)

    def _draw(self, n, rng):
        return self.s * np.exp(_log_standard_gamma(rng.generator(), self.a, n))


@dataclass(frozen=True)
class LogNormal(Alternative):
    mu: float
    sigma: float
    family: ClassVar[str] = "LN"

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        _positive("sigma", self.sigma)

    def logpdf(self, x):
        lx = np.log(x)
        return -((lx - self.mu) ** 2) / (2.0 * self.sigma**2) - lx - math.log(self.sigma) - _LOG_SQRT_2PI

    def _draw(self, n, rng):
        return np.exp(self.mu + self.sigma * rng.generator().standard_normal(n))


@dataclass(frozen=True)
class InverseGamma(Alternative):
    alpha: float
    beta: float
    family: ClassVar[str] = "iG"

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("beta", self.beta)

    def logpdf(self, x):
        return (
            self.alpha * math.log(self.beta)
            - math.lgamma(self.alpha)
            - (1.0 + self.alpha) * np.log(x)
            - self.beta / x
        )

    def _draw(self, n, rng):
        return self.beta * np.exp(-_log_standard_gamma(rng.generator(), self.alpha, n))


@dataclass(frozen=True)
class GeneralizedGamma(Alternative):
    """Density ``g x**(g s - 1) exp(-(x s / m)**g) / ((m / s)**(g s) Gamma(s))``.

    ``(x s / m)**g`` is Gamma(s, 1) distributed, which is how draws are made.
    """

    m: float
    s: float
    g: float
    family: ClassVar[str] = "GG"

    def __post_init__(self):
        _positive("m", self.m)
        _positive("s", self.s)
        _positive("g", self.g)

    def logpdf(self, x):
        g, s = self.g, self.s
        return (
            math.log(g)
            + (g * s - 1.0) * np.log(x)
            - g * s * math.log(self.m / s)
            - math.lgamma(s)
            - (x * s / self.m) ** g
        )

    def _draw(self, n, rng):
        log_g = _log_standard_gamma(rng.generator(), self.s, n)
        return np.exp(math.log(self.m / self.s) + log_g / self.g)


@dataclass(frozen=True)
class AdditiveWeibull(Alternative):
    """Survival function ``exp(-(x/a)**b - (x/c)**d)``: the minimum of W(a, b) and W(c, d)."""

    a: float
    b: float
    c: float
    d: float
    family: ClassVar[str] = "AddW"

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            _positive(name, getattr(self, name))

    def survival(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(-((x / self.a) ** self.b) - (x / self.c) ** self.d)

    def logpdf(self, x):
        za, zc = x / self.a, x / self.c
        hazard = self.b / self.a * za ** (self.b - 1.0) + self.d / self.c * zc ** (self.d - 1.0)
        return np.log(hazard) - za**self.b - zc**self.d

    def _draw(self, n, rng):
        u = rng.uniforms(2 * n)
        first = self.a * np.power(-np.log(u[:n]), 1.0 / self.b)
        second = self.c * np.power(-np.log(u[n:]), 1.0 / self.d)
        return np.minimum(first, second)


@dataclass(frozen=True)
class Pareto(Alternative):
    """Lomax form ``s / (m (s-1)) * (1 + x / (m (s-1)))**(-s-1)`` with s > 1."""

    m: float
    s: float
    family: ClassVar[str] = "P"

    def __post_init__(self):
        _positive("m", self.m)
        if not (self.s > 1 and math.isfinite(self.s)):
            raise ValueError(f"s must be a finite number > 1, got {self.s!r}")

    def logpdf(self, x):
        scale = self.m * (self.s - 1.0)
        return math.log(self.s / scale) - (self.s + 1.0) * np.log1p(x / scale)

    def _draw(self, n, rng):
        u = rng.uniforms(n)
        return self.m * (self.s - 1.0) * np.expm1(-np.log(u) / self.s)


@dataclass(frozen=True)
class InverseGaussian(Alternative):
    """Mean ``m`` and dispersion ``s`` (shape ``1/s``)."""

    m: float
    s: float
    family: ClassVar[str] = "IG"

    def __post_init__(self):
        _positive("m", self.m)
        _positive("s", self.s)

    def logpdf(self, x):
        return (
            -0.5 * np.log(2.0 * math.pi * self.s * x**3)
            - (x - self.m) ** 2 / (2.0 * x * self.s * self.m**2)
        )

    def _draw(self, n, rng):
        # Michael-Schucany-Haas: roots of the chi-square(1) transform; the larger
        # root is formed without cancellation and the smaller as mu**2 / larger.
        gen = rng.generator()
        mu, shape = self.m, 1.0 / self.s
        y = mu * gen.standard_normal(n) ** 2
        big = mu + mu / (2.0 * shape) * (y + np.sqrt(4.0 * shape * y + y * y))
        small = mu * mu / big
        pick_small = gen.random(n) * (mu + small) <= mu
        return np.where(pick_small, small, big)


def weibull_pdf(params: WeibullParams, x):
    return Weibull(params.lam, params.k).pdf(x)


def alternative_pdf(spec: Alternative, x):
    return spec.pdf(x)


def sample(spec: Alternative, n: int, rng: RngStream) -> np.ndarray:
    """``n`` i.i.d. draws from ``spec``; identical for identical ``(rng, spec, n)``."""
    return spec.sample(n, rng)


#: Data-generating laws of the two power tables, in table order.  ``None``
#: marks a row whose parameters are not recoverable.
PAPER_ALTERNATIVES: dict[str, Alternative | None] = {
    "W(1,0.9)": Weibull(1.0, 0.9),
    "W(1,1.5)": Weibull(1.0, 1.5),
    "W(1,3)": Weibull(1.0, 3.0),
    "W(1/4,1)": Weibull(0.25, 1.0),
    "G(8,1)": Gamma(8.0, 1.0),
    "G(2,1)": Gamma(2.0, 1.0),
    "G(0.2,1)": Gamma(0.2, 1.0),
    "LN(0,0.5)": LogNormal(0.0, 0.5),
    "LN(0,0.8)": LogNormal(0.0, 0.8),
    "LN(0,1.2)": LogNormal(0.0, 1.2),
    "iG(3,1)": InverseGamma(3.0, 1.0),
    "iG(1.5,1)": InverseGamma(1.5, 1.0),
    # tuples are listed as (shape, scale, family): Gamma shape first
    "GG1": GeneralizedGamma(m=0.9, s=0.6, g=1.4),
    "GG2": GeneralizedGamma(m=0.0001, s=10.0, g=0.2),
    "AddW1": AdditiveWeibull(7.0, 5.0, 0.9, 0.9),
    "AddW2": None,
    "P(0.5,2)": Pareto(0.5, 2.0),
    "P(1.5,2.5)": Pareto(1.5, 2.5),
    "IG(1,1)": InverseGaussian(1.0, 1.0),
    "IG(1,2)": InverseGaussian(1.0, 2.0),
}

WEIBULL_NULLS = ("W(1,0.9)", "W(1,1.5)", "W(1,3)", "W(1/4,1)")

UNAVAILABLE_REASON = "unavailable: parameters missing from source"
