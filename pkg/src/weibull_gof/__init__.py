"""Goodness-of-fit tests for the two-parameter Weibull family.

The statistics are weighted L2 distances built from the empirical Laplace
transform, calibrated by a parametric bootstrap.
"""

from .backend import BACKEND
from .bootstrap import TestConfig, TestReport, critical_value, p_value, run_test, run_tests
from .distributions import (
    PAPER_ALTERNATIVES,
    AdditiveWeibull,
    Gamma,
    GeneralizedGamma,
    InverseGamma,
    InverseGaussian,
    LogNormal,
    Pareto,
    Weibull,
    WeibullParams,
    erf,
    erfcx,
    sample,
)
from .errors import (
    ConstantSample,
    EmptyReplicates,
    GofError,
    MalformedNumber,
    NoConvergence,
    NonPositiveData,
    NoPositiveValues,
    QuadratureNonConvergence,
    SampleUnderflow,
)
from .estimators import EstimatorKind, FitDiagnostics, fit, fit_mle, fit_moments
from .power import PowerTable, StudyConfig, estimate_rejection_rate, run_table
from .rng import RngStream
from .statistic import (
    GapEstimate,
    StatisticValue,
    WeightFamily,
    WeightSpec,
    characterization_gap,
    r_term,
    statistic_closed_form,
    statistic_quadrature,
    vn_at,
)

__version__ = "0.1.0"
