"""Pure numpy implementation of the hot kernels.

Mirrors ``_core.pyx`` function for function.  Loops over samples are
vectorised across rows instead of being compiled, so this backend is slower
but needs nothing beyond numpy and scipy.
"""

import math

import numpy as np
from scipy.special import erfcx

from .rng import REDRAW_STRIDE, raw_to_open_uniform

OK, CONSTANT, NONPOSITIVE, NOCONV = 0, 1, 2, 3
EXP_WEIGHT, GAUSS_WEIGHT = 0, 1
MLE, MOMENTS = 0, 1

EULER_GAMMA = 0.5772156649015329
K_LO, K_HI = 0.05, 50.0
K_MIN, K_MAX = 1e-4, 1e4
MAX_NEWTON = 100
MAX_ATTEMPTS = 64
ASYMPTOTIC_Z = 8.0
CLAMP = 1e-12
# Gaussian weight: observations with x / sqrt(a) below SERIES_XI enter the
# differences of J_0 and J_1 through power series instead of subtraction
SERIES_XI = 0.05
SERIES_TERMS = 12
ASYMPTOTIC_ZP = 16.0
# below this x / (2 sqrt a) the forward moment recurrence is stable enough
FORWARD_ZP = 1.0
MILLER_DEPTH = 200
_SQRT_PI = math.sqrt(math.pi)
# caps the n*n*rows temporaries of the pair sums
_PAIR_BLOCK = 1 << 21


def weibull_draws(seed, stream, n, lam, k):
    key = np.array([seed, stream], dtype=np.uint64)
    u = raw_to_open_uniform(np.random.Philox(key=key).random_raw(n))
    return lam * np.power(-np.log(u), 1.0 / k)


def _prepare_logs(X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    m, n = X.shape
    status = np.zeros(m, dtype=np.int64)
    bad = ~(np.isfinite(X) & (X > 0)).all(axis=1)
    status[bad] = NONPOSITIVE
    u = np.log(np.where(bad[:, None], 1.0, X))
    ubar = u.mean(axis=1)
    c = u - ubar[:, None]
    spread = c.max(axis=1) - c.min(axis=1)
    status[(spread == 0) & ~bad] = CONSTANT
    if n < 2:
        status[~bad] = CONSTANT
    return c, ubar, status


def _profile(k, d, cmax):
    """Profile-equation value h(k) and its derivative, per row.

    ``d`` holds centred logs shifted so their row maximum is 0, which keeps
    ``exp(k * d)`` inside floating-point range for any k.
    """
    w = np.exp(k[:, None] * d)
    s0 = w.sum(axis=1)
    m1 = (w * d).sum(axis=1) / s0
    var = (w * (d - m1[:, None]) ** 2).sum(axis=1) / s0
    h = 1.0 / k - (cmax + m1)
    dh = -1.0 / (k * k) - var
    return h, dh, s0


def fit_mle_rows(X):
    c, ubar, status = _prepare_logs(X)
    m, n = c.shape
    lam = np.full(m, np.nan)
    kk = np.full(m, np.nan)
    iters = np.zeros(m, dtype=np.int64)
    resid = np.full(m, np.nan)
    br_lo = np.full(m, np.nan)
    br_hi = np.full(m, np.nan)
    idx = np.flatnonzero(status == OK)
    if idx.size == 0:
        return lam, kk, iters, resid, br_lo, br_hi, status

    cs = c[idx]
    cmax = cs.max(axis=1)
    d = cs - cmax[:, None]
    lo = np.full(idx.size, K_LO)
    hi = np.full(idx.size, K_HI)

    h_lo = _profile(lo, d, cmax)[0]
    while True:
        grow = (h_lo <= 0) & (lo > K_MIN)
        if not grow.any():
            break
        hi[grow] = lo[grow]
        lo[grow] = np.maximum(lo[grow] / 4.0, K_MIN)
        h_lo[grow] = _profile(lo[grow], d[grow], cmax[grow])[0]
    h_hi = _profile(hi, d, cmax)[0]
    while True:
        grow = (h_hi >= 0) & (hi < K_MAX)
        if not grow.any():
            break
        lo[grow] = hi[grow]
        hi[grow] = np.minimum(hi[grow] * 4.0, K_MAX)
        h_hi[grow] = _profile(hi[grow], d[grow], cmax[grow])[0]
    lost = (h_lo <= 0) | (h_hi >= 0)
    first_lo, first_hi = lo.copy(), hi.copy()

    sd = np.sqrt((cs**2).sum(axis=1) / (n - 1))
    k = (math.pi / math.sqrt(6.0)) / sd
    inside = (k > lo) & (k < hi)
    k = np.where(inside, k, np.sqrt(lo * hi))
    done = lost.copy()
    it = np.zeros(idx.size, dtype=np.int64)
    for step_no in range(1, MAX_NEWTON + 1):
        live = ~done
        if not live.any():
            break
        h, dh, _ = _profile(k[live], d[live], cmax[live])
        kl, lol, hil = k[live], lo[live], hi[live]
        lol = np.where(h > 0, kl, lol)
        hil = np.where(h < 0, kl, hil)
        newton = kl - h / dh
        wide = hil / lol > 4.0
        bisect = np.where(wide, np.sqrt(lol * hil), 0.5 * (lol + hil))
        tiny = np.abs(newton - kl) <= 4e-16 * kl
        knew = np.where(tiny | ((newton > lol) & (newton < hil)), newton, bisect)
        knew = np.where(h == 0, kl, knew)
        conv = (h == 0) | tiny | (hil - lol <= 4e-16 * kl)
        k[live], lo[live], hi[live] = knew, lol, hil
        it[live] = step_no
        done[live] = conv
    lost |= ~done

    h, _, s0 = _profile(k, d, cmax)
    sub_status = np.where(lost, NOCONV, OK)
    good = sub_status == OK
    status[idx] = sub_status
    kk[idx[good]] = k[good]
    lam[idx[good]] = np.exp(ubar[idx[good]] + cmax[good] + np.log(s0[good] / n) / k[good])
    iters[idx] = it
    resid[idx] = n * h
    br_lo[idx], br_hi[idx] = first_lo, first_hi
    return lam, kk, iters, resid, br_lo, br_hi, status


def fit_moments_rows(X):
    c, ubar, status = _prepare_logs(X)
    m, n = c.shape
    lam = np.full(m, np.nan)
    k = np.full(m, np.nan)
    ok = status == OK
    if ok.any():
        s2 = (c[ok] ** 2).sum(axis=1) / (n - 1)
        k[ok] = (math.pi / math.sqrt(6.0)) / np.sqrt(s2)
        lam[ok] = np.exp(ubar[ok] + EULER_GAMMA / k[ok])
    return lam, k, status


def _gauss_moments(c, a):
    """Integrals of t**p * exp(-c t - a t**2) over t > 0 for p = 0, 1, 2."""
    s = math.sqrt(a)
    z = c / (2.0 * s)
    e = erfcx(z)
    j0 = 0.5 * math.sqrt(math.pi / a) * e
    h1 = 1.0 - _SQRT_PI * z * e
    g = _SQRT_PI * (1.0 + 2.0 * z * z) * e - 2.0 * z
    big = z > ASYMPTOTIC_Z
    if np.any(big):
        zb = z[big]
        inv = 1.0 / (zb * zb)
        t = -0.5 * inv
        sh = np.zeros_like(zb)
        sg = np.zeros_like(zb)
        for mth in range(1, 25):
            if mth > 1:
                t = t * (-(2 * mth - 1) * 0.5 * inv)
            sh -= t
            sg -= 2 * mth * t
        h1[big] = sh
        g[big] = sg / zb
    return j0, h1 / (2.0 * a), g / (4.0 * s**3)


def _miller_moments(z, top):
    """``K_p(z)``, the integral of ``u**p exp(-2 z u - u**2)`` over u > 0, for
    p = 0..top, by Miller's backward recurrence normalised with ``K_0``."""
    start = top + MILLER_DEPTH
    K = np.empty(z.shape + (top + 1,))
    k_next = np.zeros_like(z)
    k_cur = np.ones_like(z)
    for n in range(start, 0, -1):
        k_prev = (2.0 * k_next + 2.0 * z * k_cur) / n
        if n - 1 <= top:
            K[..., n - 1] = k_prev
        else:
            # only the ratio matters; keep the unnormalised values in range
            scale = np.where(k_prev > 1e100, 1e-100, np.where(k_prev < 1e-100, 1e100, 1.0))
            k_prev = k_prev * scale
            k_cur = k_cur * scale
        k_next, k_cur = k_cur, k_prev
    return K * (0.5 * _SQRT_PI * erfcx(z) / K[..., 0])[..., None]


def _gauss_tables(x, a):
    """Per-observation series ingredients for the Gaussian weight.

    Returns ``J[..., p] = J_p(x)`` for p = 0..P+1, ``A[..., p-1]`` holding the
    coefficients of ``1 - exp(-x t) = sum_p A_p t**p`` and
    ``C[..., p-1] = integral of t**p (1 - exp(-x t)) w(t)`` for p = 1..P.
    """
    P = SERIES_TERMS
    s = math.sqrt(a)
    J = np.empty(x.shape + (P + 2,))
    J[..., 0], J[..., 1], J[..., 2] = _gauss_moments(x, a)
    for m in range(2, P + 1):
        J[..., m + 1] = (m * J[..., m - 1] - x * J[..., m]) / (2.0 * a)
    z = x / (2.0 * s)
    mid = (z > FORWARD_ZP) & (z <= ASYMPTOTIC_ZP)
    if np.any(mid):
        # forward recurrence loses ~z**2 digits; J_p is its minimal solution
        K = _miller_moments(z[mid], P + 1)
        J[mid, 3:] = K[:, 3:] / s ** np.arange(4, P + 3)
    big = z > ASYMPTOTIC_ZP
    if np.any(big):
        # forward recurrence is unstable for large x: expand in a / x**2 instead
        c = x[big]
        q = -a / (c * c)
        for p in range(3, P + 2):
            u = np.ones_like(c)
            tot = np.ones_like(c)
            for r in range(1, 40):
                u = u * q * ((p + 2 * r - 1) * (p + 2 * r) / r)
                tot += u
            J[big, p] = math.factorial(p) / c ** (p + 1) * tot
    M = np.array([math.gamma((p + 1) / 2.0) / (2.0 * a ** ((p + 1) / 2.0)) for p in range(2 * P + 1)])
    k = np.arange(1, P + 1)
    A = (-1.0) ** (k + 1) * np.power(x[..., None], k) / np.array([math.factorial(i) for i in k], dtype=float)
    small = x / s <= SERIES_XI
    hank = M[k[:, None] + k[None, :]]
    C = np.where(small[..., None], A @ hank, M[1 : P + 1] - J[..., 1 : P + 1])
    return J, A, C, small


def _pair_block(x, r, xi, ri, family, a):
    """Sum of the closed-form summand over rows i of the block and all j."""
    Xi, Xj = xi[..., :, None], x[..., None, :]
    Ri, Rj = ri[..., :, None], r[..., None, :]
    S = Xi + Xj
    if family == EXP_WEIGHT:
        ai, aj, aS = a + Xi, a + Xj, a + S
        d0 = Xi * Xj * (2.0 * a + S) / (a * ai * aj * aS)
        dj1 = Xj * (2.0 * a + 2.0 * Xi + Xj) / (ai * ai * aS * aS)
        j2 = 2.0 / aS**3
    else:
        Ji, Ai, Ci, si = _gauss_tables(xi, a)
        Jj, Aj, Cj, sj = _gauss_tables(x, a)
        j0s, j1s, j2 = _gauss_moments(S, a)
        d0 = 0.5 * math.sqrt(math.pi / a) - Ji[..., :, None, 0] - Jj[..., None, :, 0] + j0s
        dj1 = Ji[..., :, None, 1] - j1s
        Si, Sj = si[..., :, None], sj[..., None, :]
        if np.any(Si) or np.any(Sj):
            i_first = Si & (Xi <= Xj)
            d0_i = np.einsum("...ip,...jp->...ij", Ai, Cj)
            d0_j = np.einsum("...jp,...ip->...ij", Aj, Ci)
            d0 = np.where(i_first, d0_i, np.where(Sj, d0_j, np.where(Si, d0_i, d0)))
            dj1_s = np.einsum("...jq,...iq->...ij", Aj, Ji[..., 2:])
            dj1 = np.where(Sj, dj1_s, dj1)
    f = Ri * Rj * d0 - 2.0 * Rj * dj1 + j2
    return f.sum(axis=(-2, -1))


def r_terms(X, lam, k):
    X = np.asarray(X, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)[..., None]
    k = np.asarray(k, dtype=np.float64)[..., None]
    return (k * np.exp(k * np.log(X / lam)) - k + 1.0) / X


def statistics_rows(X, lam, k, family, a):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    m, n = X.shape
    family = np.asarray(family, dtype=np.int64)
    a = np.asarray(a, dtype=np.float64)
    out = np.zeros((m, family.size))
    R = r_terms(X, np.broadcast_to(lam, (m,)), np.broadcast_to(k, (m,)))
    rows_per = max(1, _PAIR_BLOCK // (n * n))
    i_block = max(1, _PAIR_BLOCK // n)
    for w, (fam, aw) in enumerate(zip(family, a)):
        for r0 in range(0, m, rows_per):
            x, r = X[r0 : r0 + rows_per], R[r0 : r0 + rows_per]
            total = np.zeros(x.shape[0])
            for i0 in range(0, n, i_block):
                total += _pair_block(x, r, x[:, i0 : i0 + i_block], r[:, i0 : i0 + i_block], fam, aw)
            out[r0 : r0 + rows_per, w] = total / n
    out[np.abs(out) <= CLAMP] = 0.0
    return out


def _fit_rows(X, estimator):
    if estimator == MLE:
        lam, k, *_, status = fit_mle_rows(X)
    else:
        lam, k, status = fit_moments_rows(X)
    return lam, k, status


def bootstrap(seeds, lam, k, n, b, estimator, family, a, threads=0):
    """Statistics of ``b`` parametric-bootstrap replicates for each of ``m`` fits.

    Replicate ``i`` of fit ``j`` draws from stream ``(seeds[j], i)``; a replicate
    whose re-fit fails is redrawn from ``(seeds[j], i + attempt * REDRAW_STRIDE)``.
    Returns ``(stats[m, b, nw], redraws[m], failures[m])``.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    m = seeds.size
    nw = len(family)
    out = np.full((m, b, nw), np.nan)
    redraws = np.zeros(m, dtype=np.int64)
    failures = np.zeros(m, dtype=np.int64)
    for j in range(m):
        seed = int(seeds[j])
        X = np.empty((b, n))
        for i in range(b):
            X[i] = weibull_draws(seed, i, n, lam[j], k[j])
        lh, kh, st = _fit_rows(X, estimator)
        for attempt in range(1, MAX_ATTEMPTS):
            bad = np.flatnonzero(st != OK)
            if bad.size == 0:
                break
            for i in bad:
                X[i] = weibull_draws(seed, i + attempt * REDRAW_STRIDE, n, lam[j], k[j])
            redraws[j] += bad.size
            lh[bad], kh[bad], st[bad] = _fit_rows(X[bad], estimator)
        good = st == OK
        failures[j] = b - good.sum()
        if good.any():
            out[j, good] = statistics_rows(X[good], lh[good], kh[good], family, a)
    return out, redraws, failures
