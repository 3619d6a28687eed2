"""The weighted L2 statistic T_n: closed forms, a quadrature oracle and diagnostics.

``T_n = integral over t > 0 of V_n(t)**2 w(t)``, where

    V_n(t) = n**-0.5 * sum_j [ r(X_j) (1 - exp(-t X_j)) - t exp(-t X_j) ]
    r(x)   = (k (x / lam)**k - k + 1) / x

Two weights are supported: ``exp(-a t)`` and ``exp(-a t**2)``.  Both reduce
the integral to an O(n**2) double sum (see the compiled kernel); for the
Gaussian weight every ``exp(z**2) * (1 - erf(z))`` factor goes through erfcx.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import backend
from .distributions import Alternative, WeibullParams, as_sample
from .errors import QuadratureNonConvergence
from .rng import RngStream

# the weight is below 1e-18 of its peak beyond this many "decay units"
_TRUNCATE = 18.0 * math.log(10.0)


class WeightFamily(str, enum.Enum):
    EXP = "exp"
    GAUSS = "gauss"


@dataclass(frozen=True)
class WeightSpec:
    family: WeightFamily
    a: float

    def __post_init__(self):
        object.__setattr__(self, "family", WeightFamily(self.family))
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"tuning parameter a must be positive, got {self.a!r}")
        object.__setattr__(self, "a", float(self.a))

    @property
    def code(self) -> int:
        return 0 if self.family is WeightFamily.EXP else 1

    @property
    def label(self) -> str:
        return f"T{self.code + 1}_{self.a:g}"

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-self.a * t) if self.family is WeightFamily.EXP else np.exp(-self.a * t * t)

    def horizon(self) -> float:
        """Point beyond which the weight is negligible (< 1e-18 of its peak)."""
        if self.family is WeightFamily.EXP:
            return _TRUNCATE / self.a
        return math.sqrt(_TRUNCATE / self.a)

    @classmethod
    def parse(cls, label: str) -> "WeightSpec":
        """Inverse of :attr:`label`, e.g. ``"T1_5"`` or ``"T2_0.5"``."""
        head, _, a = label.strip().upper().partition("_")
        fam = {"T1": WeightFamily.EXP, "T2": WeightFamily.GAUSS}.get(head)
        if fam is None or not a:
            raise ValueError(f"cannot parse test label {label!r}")
        return cls(fam, float(a))


@dataclass(frozen=True)
class StatisticValue:
    value: float
    n: int
    weight: WeightSpec
    params_used: WeibullParams

    def __float__(self):
        return self.value


def r_term(x, params: WeibullParams):
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)):
        raise ValueError("r_term needs x > 0")
    out = (params.k * (x / params.lam) ** params.k - params.k + 1.0) / x
    return float(out) if out.ndim == 0 else out


def closed_form_values(sample, params: WeibullParams, weights) -> np.ndarray:
    """Closed-form statistic for several weights on one sample."""
    x = as_sample(sample)
    fam = [w.code for w in weights]
    a = [w.a for w in weights]
    return backend.kernels.statistics_rows(x[None, :], params.lam, params.k, fam, a)[0]


def statistic_closed_form(sample, params: WeibullParams, weight: WeightSpec) -> StatisticValue:
    x = as_sample(sample)
    value = float(closed_form_values(x, params, [weight])[0])
    return StatisticValue(value, x.size, weight, params)


def vn_at(sample, params: WeibullParams, t):
    x = as_sample(sample)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    r = r_term(x, params)
    tx = np.multiply.outer(t_arr, x)
    v = (-r * np.expm1(-tx) - t_arr[..., None] * np.exp(-tx)).sum(axis=-1) / math.sqrt(x.size)
    return float(v) if t_arr.ndim == 0 else v


def _breakpoints(x, horizon):
    # curvature scales 1 / X_j plus halvings of the range down to the smallest
    # of them, so a slowly decaying weight does not hide one long panel
    depth = int(min(200, max(1, math.ceil(math.log2(horizon * x.max())) + 1)))
    pts = np.unique(np.concatenate([1.0 / x, horizon * 0.5 ** np.arange(1, depth + 1)]))
    return pts[(pts > 0) & (pts < horizon)]


def statistic_quadrature(
    sample, params: WeibullParams, weight: WeightSpec, rel_tol: float = 1e-9
) -> StatisticValue:
    """Evaluate the defining integral numerically (oracle for the closed forms).

    Integrates ``V_n(t)**2 w(t)`` with adaptive Gauss-Kronrod on the finite
    range where the weight exceeds 1e-18 of its peak, splitting at the
    curvature scales ``1 / X_j`` and at halvings of the range.
    """
    if not (1e-12 < rel_tol < 1e-2):
        raise ValueError("rel_tol must lie in (1e-12, 1e-2)")
    x = as_sample(sample)
    r = r_term(x, params)
    scale = 1.0 / math.sqrt(x.size)

    def integrand(t):
        # expm1 keeps r * (1 - exp(-t x)) accurate when x is tiny and r huge
        v = (-r * np.expm1(-t * x) - t * np.exp(-t * x)).sum() * scale
        return v * v * float(weight(t))

    horizon = weight.horizon()
    pts = _breakpoints(x, horizon)
    value, err, info, *rest = integrate.quad(
        integrand,
        0.0,
        horizon,
        points=pts if pts.size else None,
        epsabs=0.0,
        epsrel=rel_tol,
        limit=max(200, 8 * pts.size),
        full_output=True,
    )
    if rest and rest[0] and err > rel_tol * abs(value):
        raise QuadratureNonConvergence(f"quadrature stopped with error estimate {err:.3g}: {rest[0]}")
    return StatisticValue(float(value), x.size, weight, params)


@dataclass(frozen=True)
class GapEstimate:
    """Monte Carlo estimate of the limit of T_n / n, with its standard error."""

    value: float
    std_error: float
    draws: int

    def __float__(self):
        return self.value


def characterization_gap(
    params: WeibullParams,
    data_spec: Alternative,
    weight: WeightSpec,
    mc_draws: int,
    rng: RngStream,
    batches: int = 20,
) -> GapEstimate:
    """Estimate ``integral of (E[r(X)(1 - exp(-tX))] - E[t exp(-tX)])**2 w(t) dt``.

    The draws are split into ``batches`` groups.  In each group the squared
    mean is replaced by its unbiased version ``mean**2 - var / size``, the outer
    integral is done by vector-valued adaptive quadrature, and the reported
    value and standard error are the mean and standard error over groups.
    The estimate is therefore unbiased and centred on zero for Weibull data
    evaluated at the true parameters.
    """
    if mc_draws < 1000:
        raise ValueError("mc_draws must be >= 1000")
    x = data_spec.sample(mc_draws, rng)
    r = r_term(x, params)
    size = mc_draws // batches
    xs = x[: size * batches].reshape(batches, size)
    rs = r[: size * batches].reshape(batches, size)

    def integrand(t):
        y = -rs * np.expm1(-t * xs) - t * np.exp(-t * xs)
        mean = y.mean(axis=1)
        var = y.var(axis=1, ddof=1)
        return (mean * mean - var / size) * float(weight(t))

    horizon = weight.horizon()
    pts = np.quantile(1.0 / x, [0.05, 0.25, 0.5, 0.75, 0.95])
    pts = np.unique(pts[pts < horizon])
    res = integrate.quad_vec(
        integrand, 0.0, horizon, epsabs=1e-300, epsrel=1e-8, points=pts, limit=2000
    )
    vals, err = res[0], res[1]
    if not np.all(np.isfinite(vals)):
        raise QuadratureNonConvergence("non-finite integrand in characterization gap")
    spread = vals.std(ddof=1) / math.sqrt(batches)
    if err > max(1e-6 * np.abs(vals).max(), 1e-3 * spread):
        raise QuadratureNonConvergence(f"quad_vec error estimate {err:.3g} too large")
    return GapEstimate(float(vals.mean()), float(spread), size * batches)
