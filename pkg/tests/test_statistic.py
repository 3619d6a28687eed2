import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from weibull_gof.distributions import LogNormal, Weibull, WeibullParams
from weibull_gof.errors import QuadratureNonConvergence
from weibull_gof.estimators import fit_mle
from weibull_gof.rng import RngStream
from weibull_gof.statistic import (
    WeightFamily,
    WeightSpec,
    characterization_gap,
    r_term,
    statistic_closed_form,
    statistic_quadrature,
    vn_at,
)

from oracles import gauss_n1

EXP1 = WeightSpec(WeightFamily.EXP, 1.0)
GAUSS1 = WeightSpec(WeightFamily.GAUSS, 1.0)
UNIT = WeibullParams(1.0, 1.0)


def random_instance(rng, family):
    n = int(rng.integers(1, 51))
    lam = float(rng.uniform(0.2, 5.0))
    k = float(rng.uniform(0.3, 6.0))
    a = float(rng.choice([1.0, 2.0, 5.0]))
    x = Weibull(lam, k).sample(n, RngStream(int(rng.integers(2**32))))
    # evaluate at parameters near, but not at, the generating ones
    params = WeibullParams(lam * rng.uniform(0.7, 1.3), k * rng.uniform(0.7, 1.3))
    return x, params, WeightSpec(family, a)


class TestWeightSpec:
    def test_parse_and_label(self):
        w = WeightSpec.parse("T2_0.5")
        assert w.family is WeightFamily.GAUSS and w.a == 0.5
        assert WeightSpec.parse("T1_5").label == "T1_5"

    def test_invalid(self):
        with pytest.raises(ValueError):
            WeightSpec(WeightFamily.EXP, 0.0)
        with pytest.raises(ValueError):
            WeightSpec.parse("T3_1")

    def test_weights(self):
        assert EXP1(2.0) == pytest.approx(math.exp(-2))
        assert GAUSS1(2.0) == pytest.approx(math.exp(-4))
        assert EXP1(EXP1.horizon()) == pytest.approx(1e-18, rel=1e-6)
        assert GAUSS1(GAUSS1.horizon()) == pytest.approx(1e-18, rel=1e-6)


class TestRTerm:
    def test_examples(self):
        assert r_term(1.0, UNIT) == 1.0
        assert r_term(2.0, WeibullParams(1.0, 2.0)) == pytest.approx(3.5, rel=1e-15)
        for k in (0.3, 1.0, 4.0):
            assert r_term(2.5, WeibullParams(2.5, k)) == pytest.approx(1 / 2.5, rel=1e-14)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            r_term(0.0, UNIT)


class TestVn:
    def test_zero(self):
        assert vn_at([0.3, 1.2, 4.0], WeibullParams(1.3, 0.8), 0.0) == 0.0

    @pytest.mark.parametrize("t", [0.01, 0.5, 1.0, 3.0, 20.0])
    def test_single_observation(self, t):
        expected = 1 - math.exp(-t) - t * math.exp(-t)
        assert vn_at([1.0], UNIT, t) == pytest.approx(expected, rel=1e-13, abs=1e-16)

    def test_large_t_limit(self):
        x = np.array([0.4, 1.0, 2.2, 3.1])
        p = WeibullParams(1.5, 1.7)
        limit = r_term(x, p).sum() / math.sqrt(x.size)
        assert vn_at(x, p, 1e4) == pytest.approx(limit, rel=1e-6)

    def test_negative_t(self):
        with pytest.raises(ValueError):
            vn_at([1.0], UNIT, -1.0)


class TestAnalyticValues:
    def test_exp_n1(self):
        assert abs(statistic_closed_form([1.0], UNIT, EXP1).value - 7 / 54) <= 1e-10
        assert abs(statistic_quadrature([1.0], UNIT, EXP1, 1e-9).value - 7 / 54) <= 1e-10

    def test_gauss_n1(self):
        oracle = gauss_n1()
        assert oracle == pytest.approx(0.0300536, abs=1e-7)
        assert statistic_closed_form([1.0], UNIT, GAUSS1).value == pytest.approx(oracle, rel=1e-12)
        assert statistic_quadrature([1.0], UNIT, GAUSS1, 1e-10).value == pytest.approx(oracle, rel=1e-9)

    def test_rel_tol_domain(self):
        for tol in (1e-12, 1e-2, 0.5):
            with pytest.raises(ValueError):
                statistic_quadrature([1.0], UNIT, EXP1, tol)

    def test_quadrature_error_type(self):
        assert issubclass(QuadratureNonConvergence, Exception)


@pytest.mark.parametrize("family", list(WeightFamily))
def test_closed_form_matches_quadrature(family):
    rng = np.random.default_rng(20 + WeightSpec(family, 1.0).code)
    worst = 0.0
    for _ in range(100):
        x, params, w = random_instance(rng, family)
        cf = statistic_closed_form(x, params, w).value
        q = statistic_quadrature(x, params, w, 1e-10).value
        worst = max(worst, abs(cf - q) / q)
    assert worst <= 1e-6


@pytest.mark.parametrize("family", list(WeightFamily))
def test_closed_form_wide_tuning(family):
    # a from 1e-6 to 1e3 crosses every branch of the Gaussian kernel
    rng = np.random.default_rng(30 + WeightSpec(family, 1.0).code)
    for _ in range(60):
        x, params, _ = random_instance(rng, family)
        w = WeightSpec(family, float(10 ** rng.uniform(-6, 3)))
        cf = statistic_closed_form(x, params, w).value
        q = statistic_quadrature(x, params, w, 1e-11).value
        assert cf == pytest.approx(q, rel=1e-8), w


@pytest.mark.parametrize("family", list(WeightFamily))
def test_tiny_observations_stay_accurate(family):
    # small x / sqrt(a) (or x / a) is where the printed differences cancel
    x = np.array([3e-5, 2e-3, 0.04, 0.9, 1.7])
    p = WeibullParams(0.5, 0.31)
    for a in (1.0, 5.0):
        w = WeightSpec(family, a)
        cf = statistic_closed_form(x, p, w).value
        q = statistic_quadrature(x, p, w, 1e-11).value
        assert cf == pytest.approx(q, rel=1e-8)


samples = st.lists(st.floats(1e-2, 1e2), min_size=1, max_size=25)
params_st = st.builds(WeibullParams, st.floats(0.2, 5.0), st.floats(0.3, 6.0))
weights_st = st.builds(WeightSpec, st.sampled_from(list(WeightFamily)), st.sampled_from([0.5, 1.0, 2.0, 5.0]))


@given(samples, params_st, weights_st)
def test_nonnegative(values, params, w):
    assert statistic_closed_form(values, params, w).value >= -1e-12


@given(samples, params_st, weights_st, st.randoms(use_true_random=False))
def test_permutation_symmetry(values, params, w, rnd):
    perm = list(values)
    rnd.shuffle(perm)
    t1 = statistic_closed_form(values, params, w).value
    t2 = statistic_closed_form(perm, params, w).value
    assert t2 == pytest.approx(t1, rel=1e-12, abs=1e-14)


@given(samples, params_st, st.sampled_from(list(WeightFamily)), st.sampled_from([1.0, 2.0, 5.0]), st.floats(0.05, 20.0))
def test_scale_relation(values, params, family, a, c):
    x = np.array(values)
    power = 1 if family is WeightFamily.EXP else 2
    lhs = statistic_closed_form(c * x, WeibullParams(c * params.lam, params.k), WeightSpec(family, a)).value
    rhs = statistic_closed_form(x, params, WeightSpec(family, a / c**power)).value / c**3
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("a", [1.0, 2.0, 5.0])
def test_exponentiality_reduction(a):
    # k pinned to 1 and lambda estimated by the mean: r(x) = 1 / mean
    x = LogNormal(0.0, 0.7).sample(30, RngStream(11))
    lam = x.mean()

    def integrand(t):
        v = ((1 - np.exp(-t * x)) / lam - t * np.exp(-t * x)).sum() / math.sqrt(x.size)
        return v * v * math.exp(-a * t)

    direct = integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-11, limit=500)[0]
    value = statistic_closed_form(x, WeibullParams(lam, 1.0), WeightSpec(WeightFamily.EXP, a)).value
    assert value == pytest.approx(direct, rel=1e-6)


class TestCharacterizationGap:
    @pytest.mark.parametrize("w", [WeightSpec(WeightFamily.EXP, 1.0), WeightSpec(WeightFamily.GAUSS, 2.0)])
    def test_weibull_is_zero(self, w):
        g = characterization_gap(WeibullParams(1.0, 1.5), Weibull(1.0, 1.5), w, 20_000, RngStream(1))
        assert abs(g.value) <= 3 * g.std_error
        assert g.draws == 20_000

    def test_lognormal_positive(self):
        spec = LogNormal(0.0, 1.2)
        pseudo, _ = fit_mle(spec.sample(200_000, RngStream(2)))
        g = characterization_gap(pseudo, spec, WeightSpec(WeightFamily.EXP, 1.0), 20_000, RngStream(3))
        assert g.value > 5 * g.std_error > 0

    def test_weight_scaling(self):
        c, a = 2.5, 2.0
        p = WeibullParams(1.0, 1.5)
        # Weibull draws are scale-equivariant in the stream, so both sides see the same data
        g1 = characterization_gap(WeibullParams(c, 1.5), Weibull(c, 1.5), WeightSpec(WeightFamily.EXP, a), 5000, RngStream(4))
        g2 = characterization_gap(p, Weibull(1.0, 1.5), WeightSpec(WeightFamily.EXP, a / c), 5000, RngStream(4))
        assert g1.value == pytest.approx(g2.value / c**3, rel=1e-5, abs=1e-6 * g2.std_error)

    def test_min_draws(self):
        with pytest.raises(ValueError):
            characterization_gap(UNIT, Weibull(1.0, 1.0), EXP1, 999, RngStream(0))
