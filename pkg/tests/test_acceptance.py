"""Acceptance criteria, one test and one printed PASS/FAIL line each.

Power cells use the default master seed (0) and the desk-scale settings
(1000 replications, b = 200), i.e. exactly what ``weibull-gof power`` prints.
"""

import math

import numpy as np
import pytest

from weibull_gof.bootstrap import run_tests
from weibull_gof.datasets import BUILTIN
from weibull_gof.distributions import LogNormal, Weibull, WeibullParams
from weibull_gof.estimators import EstimatorKind, fit, fit_mle, fit_moments, EULER_GAMMA
from weibull_gof.power import PAPER_TESTS, StudyConfig, paper_value, run_table
from weibull_gof.rng import RngStream
from weibull_gof.statistic import (
    WeightFamily,
    WeightSpec,
    characterization_gap,
    statistic_closed_form,
    statistic_quadrature,
)

from oracles import grid_bisection_root

pytestmark = pytest.mark.slow

NULLS = ("W(1,0.9)", "W(1,1.5)", "W(1,3)", "W(1/4,1)")
UNIT = WeibullParams(1.0, 1.0)


def _fmt(cells):
    return ", ".join(cells)


def test_1_null_calibration(acceptance):
    table = run_table(StudyConfig(alternatives=NULLS, sample_sizes=(20, 50)))
    misses = [
        f"{c.alternative} n={c.n} {c.test}={c.rate:.1f}"
        for c in table.cells
        if not (3.0 <= c.rate <= 7.0)
    ]
    rates = [c.rate for c in table.cells]
    detail = f"{len(rates)} cells in [{min(rates):.1f}, {max(rates):.1f}]%, band [3, 7]"
    if misses:
        detail += "; outside: " + _fmt(misses)
    assert acceptance(1, "null-level calibration", not misses, detail)


# (alternative, n, test, predicate on the rate in percent, description)
SPOT_CHECKS = [
    ("iG(1.5,1)", 50, "T1_5", lambda r: abs(r - 98) <= 4, "98 +- 4"),
    ("LN(0,0.5)", 50, "T1_1", lambda r: abs(r - 65) <= 4, "65 +- 4"),
    ("IG(1,2)", 50, "T2_1", lambda r: abs(r - 93) <= 4, "93 +- 4"),
    ("G(0.2,1)", 50, "T2_1", lambda r: r <= 2, "<= 2"),
    ("G(0.2,1)", 50, "T2_2", lambda r: r <= 2, "<= 2"),
    ("G(0.2,1)", 50, "T2_5", lambda r: r <= 2, "<= 2"),
    ("iG(1.5,1)", 20, "T1_5", lambda r: abs(r - 60) <= 4, "60 +- 4"),
    ("P(0.5,2)", 20, "T2_5", lambda r: abs(r - 24) <= 4, "24 +- 4"),
]


def test_2_power_spot_checks(acceptance):
    rows = {(alt, n) for alt, n, *_ in SPOT_CHECKS}
    cells = {}
    for alt, n in sorted(rows):
        table = run_table(StudyConfig(alternatives=(alt,), sample_sizes=(n,)))
        cells.update({(c.alternative, c.n, c.test): c for c in table.cells})
    parts, ok = [], True
    for alt, n, test, check, want in SPOT_CHECKS:
        rate = cells[(alt, n, test)].rate
        good = check(rate)
        ok &= good
        parts.append(f"{alt} n={n} {test}={rate:.1f} (want {want}){'' if good else ' MISS'}")
    assert acceptance(2, "power reproduction", ok, _fmt(parts))


PUBLISHED_P = {
    "fibers-1mm": (0.189, 0.180),
    "fibers-10mm": (0.013, 0.019),
    "fibers-20mm": (0.215, 0.219),
    "fibers-50mm": (0.228, 0.218),
}


def test_3_fiber_p_values(acceptance):
    weights = [WeightSpec(WeightFamily.EXP, 5.0), WeightSpec(WeightFamily.GAUSS, 5.0)]
    parts, ok = [], True
    for name, published in PUBLISHED_P.items():
        reports = run_tests(BUILTIN[name], weights, b=2000, seed=0)
        for rep, ref in zip(reports, published):
            p = rep.p_value
            if name == "fibers-10mm":
                good = abs(p - ref) <= 0.02
            else:
                good = p > 0.1 and abs(p - ref) <= 0.06
            ok &= good
            parts.append(f"{name} {rep.config.weight.label} p={p:.3f} vs {ref}{'' if good else ' MISS'}")
    assert acceptance(3, "real-data p-values", ok, _fmt(parts))


def test_4_oracle_equivalence(acceptance):
    gen = np.random.default_rng(404)
    worst = {}
    for family in WeightFamily:
        w_err = 0.0
        for _ in range(100):
            n = int(gen.integers(1, 51))
            lam, k = gen.uniform(0.2, 5.0), gen.uniform(0.3, 6.0)
            x = Weibull(lam, k).sample(n, RngStream(int(gen.integers(2**32))))
            params = WeibullParams(lam * gen.uniform(0.7, 1.3), k * gen.uniform(0.7, 1.3))
            w = WeightSpec(family, float(gen.choice([1.0, 2.0, 5.0])))
            cf = statistic_closed_form(x, params, w).value
            q = statistic_quadrature(x, params, w, 1e-10).value
            w_err = max(w_err, abs(cf - q) / q)
        worst[family.value] = w_err
    exp1 = WeightSpec(WeightFamily.EXP, 1.0)
    e_cf = abs(statistic_closed_form([1.0], UNIT, exp1).value - 7 / 54)
    e_q = abs(statistic_quadrature([1.0], UNIT, exp1, 1e-9).value - 7 / 54)
    ok = max(worst.values()) <= 1e-6 and e_cf <= 1e-10 and e_q <= 1e-10
    detail = (
        f"max rel err exp {worst['exp']:.1e}, gauss {worst['gauss']:.1e} (<= 1e-6); "
        f"7/54 error closed {e_cf:.1e}, quadrature {e_q:.1e} (<= 1e-10)"
    )
    assert acceptance(4, "oracle equivalence", ok, detail)


def test_5_scale_relation(acceptance):
    gen = np.random.default_rng(505)
    worst = {}
    for family, power in ((WeightFamily.EXP, 1), (WeightFamily.GAUSS, 2)):
        err = 0.0
        for _ in range(200):
            n = int(gen.integers(1, 41))
            x = gen.uniform(0.05, 5.0, n) * gen.lognormal(0, 1)
            params = WeibullParams(gen.uniform(0.2, 5.0), gen.uniform(0.3, 6.0))
            c = math.exp(gen.uniform(math.log(0.05), math.log(20.0)))
            a = float(gen.choice([1.0, 2.0, 5.0]))
            lhs = statistic_closed_form(c * x, WeibullParams(c * params.lam, params.k), WeightSpec(family, a)).value
            rhs = statistic_closed_form(x, params, WeightSpec(family, a / c**power)).value / c**3
            err = max(err, abs(lhs - rhs) / abs(rhs))
        worst[family.value] = err
    ok = max(worst.values()) <= 1e-10
    detail = f"max rel err exp {worst['exp']:.1e}, gauss {worst['gauss']:.1e} (<= 1e-10)"
    assert acceptance(5, "metamorphic scale relation", ok, detail)


def test_6_characterization_gap(acceptance):
    w = WeightSpec(WeightFamily.EXP, 1.0)
    null = characterization_gap(WeibullParams(1.0, 1.5), Weibull(1.0, 1.5), w, 20_000, RngStream(6))
    spec = LogNormal(0.0, 1.2)
    pseudo, _ = fit_mle(spec.sample(200_000, RngStream(7)))
    alt = characterization_gap(pseudo, spec, w, 20_000, RngStream(8))
    null_ok = abs(null.value) <= 3 * null.std_error
    alt_ok = alt.value > 5 * alt.std_error
    detail = (
        f"Weibull {null.value:.2e} +- {null.std_error:.1e} ({abs(null.value) / null.std_error:.1f} SE, <= 3); "
        f"LN(0,1.2) {alt.value:.2e} +- {alt.std_error:.1e} ({alt.value / alt.std_error:.0f} SE, > 5)"
    )
    assert acceptance(6, "characterization diagnostic", null_ok and alt_ok, detail)


def test_7_estimators(acceptance):
    parts, ok = [], True
    # equivariance
    gen = np.random.default_rng(707)
    eq_mle = eq_mom = 0.0
    for s in range(50):
        x = Weibull(gen.uniform(0.2, 5), gen.uniform(0.3, 6)).sample(int(gen.integers(2, 100)), RngStream(s))
        c = math.exp(gen.uniform(-5, 5))
        for kind in EstimatorKind:
            p1, p2 = fit(x, kind), fit(c * x, kind)
            err = max(abs(p2.k / p1.k - 1), abs(p2.lam / (c * p1.lam) - 1))
            if kind is EstimatorKind.MLE:
                eq_mle = max(eq_mle, err)
            else:
                eq_mom = max(eq_mom, err)
    good = eq_mle <= 1e-9 and eq_mom <= 1e-12
    ok &= good
    parts.append(f"equivariance mle {eq_mle:.1e} (<= 1e-9), moments {eq_mom:.1e} (<= 1e-12)")
    # two-point MLE
    err = abs(fit_mle([1.0, 2.0])[0].k - grid_bisection_root([1.0, 2.0]))
    rel = err / grid_bisection_root([1.0, 2.0])
    ok &= rel <= 1e-8
    parts.append(f"two-point root rel err {rel:.1e} (<= 1e-8)")
    # moment hand example
    p = fit_moments([1.0, math.e])
    dk = abs(p.k - math.pi / math.sqrt(3))
    dl = abs(p.lam - math.exp(0.5 + EULER_GAMMA * math.sqrt(3) / math.pi))
    ok &= max(dk, dl) <= 1e-12
    parts.append(f"{{1, e}} errors k {dk:.1e}, lambda {dl:.1e} (<= 1e-12)")
    # consistency: median error shrinks with n over 50 seeds
    for kind in EstimatorKind:
        med = {}
        for n in (100, 10_000):
            errs = []
            for seed in range(50):
                q = fit(Weibull(1.5, 2.5).sample(n, RngStream(seed, n)), kind)
                errs.append(abs(q.k - 2.5) + abs(q.lam - 1.5))
            med[n] = float(np.median(errs))
        good = med[10_000] < med[100] / 5
        ok &= good
        parts.append(f"{kind.value} median error {med[100]:.3f} -> {med[10_000]:.4f}")
    assert acceptance(7, "estimator suite", ok, _fmt(parts))
