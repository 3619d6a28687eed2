"""Maximum-likelihood and moment estimation of Weibull parameters."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import backend
from .distributions import WeibullParams, as_sample
from .errors import ConstantSample, NoConvergence, NonPositiveData

EULER_GAMMA = 0.5772156649015329

_STATUS_ERRORS = {
    1: (ConstantSample, "sample is constant; the likelihood equations have no root"),
    2: (NonPositiveData, "observations must be finite and positive"),
    3: (NoConvergence, "shape root not bracketed inside [1e-4, 1e4]"),
}


class EstimatorKind(str, enum.Enum):
    MLE = "mle"
    MOMENTS = "moments"

    @property
    def code(self) -> int:
        return 0 if self is EstimatorKind.MLE else 1


@dataclass(frozen=True)
class FitDiagnostics:
    """Root-finder trace: Newton/bisection steps, final profile residual
    ``n/k + sum(log x) - n * sum(x**k log x) / sum(x**k)``, and the bracket
    that was searched."""

    iterations: int
    residual: float
    bracket: tuple[float, float]


def _raise_for(status: int):
    if status:
        cls, msg = _STATUS_ERRORS[int(status)]
        raise cls(msg)


def _checked(sample) -> np.ndarray:
    x = as_sample(sample)
    if x.size < 2:
        raise ConstantSample("at least two observations are needed")
    return x


def fit_mle(sample) -> tuple[WeibullParams, FitDiagnostics]:
    """Solve the Weibull likelihood equations.

    The shape solves the profile equation, which is strictly decreasing in k
    after division by n; it is bracketed in [0.05, 50] (widened geometrically
    to at most [1e-4, 1e4]) and refined by Newton steps that fall back to
    bisection whenever they leave the bracket.  Sums of ``x**k`` are formed
    relative to the largest observation, so no power overflows.  The scale
    then follows in closed form.
    """
    x = _checked(sample)
    lam, k, iters, resid, lo, hi, status = backend.kernels.fit_mle_rows(x[None, :])
    _raise_for(status[0])
    diag = FitDiagnostics(int(iters[0]), float(resid[0]), (float(lo[0]), float(hi[0])))
    return WeibullParams(float(lam[0]), float(k[0])), diag


def fit_moments(sample) -> WeibullParams:
    x = _checked(sample)
    lam, k, status = backend.kernels.fit_moments_rows(x[None, :])
    _raise_for(status[0])
    return WeibullParams(float(lam[0]), float(k[0]))


def fit(sample, kind: EstimatorKind | str = EstimatorKind.MLE) -> WeibullParams:
    kind = EstimatorKind(kind)
    if kind is EstimatorKind.MLE:
        return fit_mle(sample)[0]
    return fit_moments(sample)


def profile_equation(sample, k: float) -> float:
    """Residual of the shape likelihood equation at ``k`` (zero at the MLE)."""
    x = _checked(sample)
    logx = np.log(x)
    w = np.exp(k * (logx - logx.max()))
    n = x.size
    return float(n / k + logx.sum() - n * (w * logx).sum() / w.sum())
