"""The compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from weibull_gof import backend
from weibull_gof.distributions import Weibull
from weibull_gof.rng import RngStream

py = backend.get("python")
pytestmark = pytest.mark.skipif("compiled" not in backend.available(), reason="extension not built")
FAMILY = [0, 0, 0, 1, 1, 1]
A = [1.0, 2.0, 5.0, 1.0, 2.0, 5.0]


@pytest.fixture(scope="module")
def cc():
    return backend.get("compiled")


@pytest.fixture(scope="module")
def rows():
    gen = np.random.default_rng(5)
    out = []
    for i in range(40):
        lam, k = gen.uniform(0.2, 5), gen.uniform(0.3, 6)
        out.append(Weibull(lam, k).sample(30, RngStream(i)))
    X = np.array(out)
    X[0, :3] = [3e-6, 1e-4, 2e-3]  # series branch of the Gaussian kernel
    return X


def test_draws_identical(cc):
    for seed, stream in [(0, 0), (7, 3), (2**63 + 5, 2**40 + 1)]:
        # same uniforms; pow/log may differ by one ulp between libm and numpy
        np.testing.assert_allclose(
            cc.weibull_draws(seed, stream, 100, 1.3, 0.7),
            py.weibull_draws(seed, stream, 100, 1.3, 0.7),
            rtol=4e-16,
        )


def test_mle_rows(cc, rows):
    a = cc.fit_mle_rows(rows)
    b = py.fit_mle_rows(rows)
    np.testing.assert_array_equal(a[-1], b[-1])
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12)


def test_moment_rows(cc, rows):
    for u, v in zip(cc.fit_moments_rows(rows), py.fit_moments_rows(rows)):
        np.testing.assert_allclose(u, v, rtol=1e-13)


def test_statistics_rows(cc, rows):
    lam, k, *_ = py.fit_mle_rows(rows)
    np.testing.assert_allclose(
        cc.statistics_rows(rows, lam, k, FAMILY, A),
        py.statistics_rows(rows, lam, k, FAMILY, A),
        rtol=1e-12,
        atol=1e-13,  # small T is a difference of O(1) pair terms
    )


def test_failure_status(cc):
    X = np.array([[1.0, 1.0, 1.0], [1.0, -2.0, 3.0], [1.0, 1.0 + 1e-12, 1.0]])
    np.testing.assert_array_equal(cc.fit_mle_rows(X)[-1], py.fit_mle_rows(X)[-1])
    np.testing.assert_array_equal(cc.fit_moments_rows(X)[-1], py.fit_moments_rows(X)[-1])


@pytest.mark.parametrize("estimator", [0, 1])
def test_bootstrap(cc, estimator):
    seeds = np.array([3, 99], dtype=np.uint64)
    lam = np.array([1.0, 2.5])
    k = np.array([1.5, 0.6])
    args = (seeds, lam, k, 15, 40, estimator, FAMILY, A)
    s1, r1, f1 = cc.bootstrap(*args, 2)
    s2, r2, f2 = py.bootstrap(*args)
    np.testing.assert_array_equal(r1, r2)
    np.testing.assert_array_equal(f1, f2)
    np.testing.assert_allclose(s1, s2, rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("z", [0.01, 0.5, 1.0, 1.01, 3.0, 8.0, 15.9, 16.1, 40.0])
def test_gauss_moment_table(z):
    # J_p(x) = integral of t**p exp(-x t - a t**2), every recurrence regime
    import mpmath as mp

    a = 0.7
    x = 2 * z * np.sqrt(a)
    J, *_ = py._gauss_tables(np.array([x]), a)
    with mp.workdps(30):
        for p in range(J.shape[-1]):
            ref = mp.quad(lambda t: t**p * mp.e ** (-x * t - a * t * t), [0, 1, 5, 20, mp.inf])
            assert J[0, p] == pytest.approx(float(ref), rel=1e-12)
