"""Parametric bootstrap calibration of the statistics.

The observed sample is fitted, ``b`` samples of the same size are drawn from
the fitted Weibull law, each is re-fitted and its statistic evaluated.  The
test rejects when the observed statistic exceeds the order statistic
``T*_(m)`` with ``m = b(1 - alpha)`` when that is an integer and
``floor(b(1 - alpha)) + 1`` otherwise.  Replicate ``i`` always draws from
``RngStream(seed, i)``, so results do not depend on how the work is spread
over threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .distributions import WeibullParams, as_sample
from .errors import EmptyReplicates
from .estimators import EstimatorKind, _raise_for
from .statistic import StatisticValue, WeightFamily, WeightSpec

DEFAULT_WEIGHT = WeightSpec(WeightFamily.EXP, 5.0)
DEFAULT_B = 2000


@dataclass(frozen=True)
class TestConfig:
    """Settings of one bootstrap test."""

    __test__ = False  # not a pytest class

    weight: WeightSpec = DEFAULT_WEIGHT
    estimator: EstimatorKind = EstimatorKind.MLE
    b: int = DEFAULT_B
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "estimator", EstimatorKind(self.estimator))
        if int(self.b) != self.b or self.b < 1:
            raise ValueError(f"b must be a positive integer, got {self.b!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly between 0 and 1, got {self.alpha!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "b", int(self.b))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    statistic: StatisticValue
    critical_value: float
    p_value: float
    reject: bool
    fitted: WeibullParams
    config: TestConfig
    replicate_summary: tuple[float, float, float]
    redraws: int = 0
    ties: int = 0
    failed_replicates: int = 0
    backend: str = field(default=backend.BACKEND, compare=False)

    def to_json(self) -> dict:
        """Machine report with the fixed field set documented in ``report_schema.json``."""
        return {
            "statistic": self.statistic.value,
            "weight_family": self.config.weight.family.value,
            "tuning_a": self.config.weight.a,
            "estimator": self.config.estimator.value,
            "n": self.statistic.n,
            "b": self.config.b,
            "alpha": self.config.alpha,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "lambda_hat": self.fitted.lam,
            "k_hat": self.fitted.k,
            "seed": self.config.seed,
            "redraws": self.redraws,
        }


def order_index(b: int, alpha: float) -> int:
    """1-based rank of the critical order statistic among ``b`` replicates."""
    m = b * (1.0 - alpha)
    nearest = round(m)
    # b(1 - alpha) is meant as an exact rational; absorb binary rounding of alpha
    if abs(m - nearest) <= 1e-9 * max(1.0, m):
        return max(int(nearest), 1)
    return int(math.floor(m)) + 1


def critical_value(sorted_replicates, alpha: float) -> float:
    """Order statistic ``T*_(m)`` of ascending replicates (1-based ``m``, see :func:`order_index`)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly between 0 and 1")
    reps = np.asarray(sorted_replicates, dtype=np.float64).reshape(-1)
    if reps.size == 0:
        raise EmptyReplicates("no bootstrap replicates to take an order statistic from")
    if np.any(np.diff(reps) < 0):
        raise ValueError("replicates must be sorted ascending")
    return float(reps[order_index(reps.size, alpha) - 1])


def p_value(statistic: float, replicates) -> float:
    """Share of replicates at least as large as the observed statistic."""
    reps = np.asarray(replicates, dtype=np.float64)
    if reps.size == 0:
        raise EmptyReplicates("no bootstrap replicates")
    return float(np.count_nonzero(reps >= statistic) / reps.size)


@dataclass
class BatchResult:
    """Decisions for ``m`` samples and ``nw`` weights computed in one pass.

    ``status`` is the fit status of each observed sample (0 = ok); rows with a
    nonzero status carry NaN everywhere.
    """

    statistics: np.ndarray  # (m, nw)
    lam: np.ndarray
    k: np.ndarray
    critical_values: np.ndarray  # (m, nw)
    p_values: np.ndarray  # (m, nw)
    reject: np.ndarray  # (m, nw) bool
    ties: np.ndarray  # (m, nw)
    summary: np.ndarray  # (m, nw, 3)
    redraws: np.ndarray  # (m,)
    failed: np.ndarray  # (m,)
    status: np.ndarray  # (m,)


def _fit_rows(X, estimator: EstimatorKind):
    kern = backend.kernels
    if estimator is EstimatorKind.MLE:
        lam, k, *_, status = kern.fit_mle_rows(X)
    else:
        lam, k, status = kern.fit_moments_rows(X)
    return lam, k, status


def decide(stats, replicates, alpha):
    """Critical values, p-values, decisions, tie counts and (min, median, max).

    ``stats`` is (m, nw) and ``replicates`` (m, b, nw); NaN replicates (fits
    that failed after every redraw) are left out of each row's reference set.
    """
    m, b, nw = replicates.shape
    cv = np.full((m, nw), np.nan)
    pv = np.full((m, nw), np.nan)
    ties = np.zeros((m, nw), dtype=np.int64)
    summary = np.full((m, nw, 3), np.nan)
    srt = np.sort(replicates, axis=1)  # NaNs sort last
    valid = np.count_nonzero(np.isfinite(replicates), axis=1)  # (m, nw)
    for bb in np.unique(valid):
        if bb == 0:
            continue
        rows, cols = np.nonzero(valid == bb)
        block = srt[rows, :bb, cols]
        t = stats[rows, cols]
        cv[rows, cols] = block[:, order_index(int(bb), alpha) - 1]
        pv[rows, cols] = np.count_nonzero(block >= t[:, None], axis=1) / bb
        ties[rows, cols] = np.count_nonzero(block == t[:, None], axis=1)
        summary[rows, cols] = np.stack(
            [block[:, 0], np.median(block, axis=1), block[:, -1]], axis=1
        )
    with np.errstate(invalid="ignore"):
        reject = stats > cv
    return cv, pv, reject, ties, summary


def calibrate(X, weights, estimator, b: int, alpha: float, seeds, threads=None) -> BatchResult:
    """Run the bootstrap test for every row of ``X`` against several weights.

    Row ``j`` uses replicate seed ``seeds[j]``; all weights share the same
    replicate samples, which is what a single call of :func:`run_test` per
    weight would also draw.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    m, n = X.shape
    estimator = EstimatorKind(estimator)
    weights = list(weights)
    fam = np.array([w.code for w in weights], dtype=np.int64)
    avals = np.array([w.a for w in weights], dtype=np.float64)
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1)
    if seeds.size != m:
        raise ValueError("one seed per sample is required")
    if threads is None:
        threads = backend.thread_count()

    kern = backend.kernels
    lam, k, status = _fit_rows(X, estimator)
    ok = np.flatnonzero(status == 0)
    nw = len(weights)
    stats = np.full((m, nw), np.nan)
    reps = np.full((m, b, nw), np.nan)
    redraws = np.zeros(m, dtype=np.int64)
    failed = np.zeros(m, dtype=np.int64)
    if ok.size:
        stats[ok] = kern.statistics_rows(X[ok], lam[ok], k[ok], fam, avals)
        r, red, fail = kern.bootstrap(seeds[ok], lam[ok], k[ok], n, b, estimator.code, fam, avals, threads)
        reps[ok], redraws[ok], failed[ok] = r, red, fail
    cv, pv, reject, ties, summary = decide(stats, reps, alpha)
    return BatchResult(stats, lam, k, cv, pv, reject, ties, summary, redraws, failed, status)


def run_tests(sample, weights, estimator=EstimatorKind.MLE, b=DEFAULT_B, alpha=0.05, seed=0):
    """Bootstrap tests for several weights sharing one set of replicates."""
    x = as_sample(sample)
    configs = [TestConfig(w, estimator, b, alpha, seed) for w in weights]
    if not configs:
        return []
    if x.size < 2:
        _raise_for(1)
    res = calibrate(x[None, :], [c.weight for c in configs], configs[0].estimator, b, alpha, [configs[0].seed])
    _raise_for(res.status[0])
    if res.failed[0] == b:
        raise EmptyReplicates("every bootstrap replicate failed to fit")
    fitted = WeibullParams(float(res.lam[0]), float(res.k[0]))
    reports = []
    for j, cfg in enumerate(configs):
        value = StatisticValue(float(res.statistics[0, j]), x.size, cfg.weight, fitted)
        reports.append(
            TestReport(
                statistic=value,
                critical_value=float(res.critical_values[0, j]),
                p_value=float(res.p_values[0, j]),
                reject=bool(res.reject[0, j]),
                fitted=fitted,
                config=cfg,
                replicate_summary=tuple(float(v) for v in res.summary[0, j]),
                redraws=int(res.redraws[0]),
                ties=int(res.ties[0, j]),
                failed_replicates=int(res.failed[0]),
            )
        )
    return reports


def run_test(sample, config: TestConfig = TestConfig()) -> TestReport:
    return run_tests(sample, [config.weight], config.estimator, config.b, config.alpha, config.seed)[0]
