# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Philox substreams, Weibull fits and the closed-form statistics.

Same contract as ``_fallback``.  The bootstrap loop runs without the GIL and
fans replicates out over OpenMP threads; every replicate writes its own slot,
so results do not depend on the thread count.
"""

import numpy as np

cimport openmp
from cython.parallel cimport parallel, prange
from libc.math cimport exp, fabs, isfinite, log, pow, sqrt, tgamma
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc
from scipy.special.cython_special cimport erfcx as sp_erfcx

cdef extern from *:
    """
    #include <stdint.h>
    typedef struct {
        uint64_t ctr[4];
        uint64_t key[2];
        uint64_t buf[4];
        int pos;
    } gof_philox;

    static inline void gof_philox_init(gof_philox *s, uint64_t k0, uint64_t k1) {
        s->ctr[0] = s->ctr[1] = s->ctr[2] = s->ctr[3] = 0;
        s->key[0] = k0;
        s->key[1] = k1;
        s->pos = 4;
    }

    static inline void gof_mulhilo(uint64_t a, uint64_t b, uint64_t *hi, uint64_t *lo) {
        unsigned __int128 p = (unsigned __int128)a * b;
        *hi = (uint64_t)(p >> 64);
        *lo = (uint64_t)p;
    }

    /* Philox4x64-10, laid out exactly like numpy's Philox bit generator */
    static inline uint64_t gof_philox_next(gof_philox *s) {
        uint64_t c0, c1, c2, c3, k0, k1, hi0, lo0, hi1, lo1;
        int r;
        if (s->pos < 4) return s->buf[s->pos++];
        if (++s->ctr[0] == 0)
            if (++s->ctr[1] == 0)
                if (++s->ctr[2] == 0)
                    ++s->ctr[3];
        c0 = s->ctr[0]; c1 = s->ctr[1]; c2 = s->ctr[2]; c3 = s->ctr[3];
        k0 = s->key[0]; k1 = s->key[1];
        for (r = 0; r < 10; r++) {
            if (r > 0) {
                k0 += 0x9E3779B97F4A7C15ULL;
                k1 += 0xBB67AE8584CAA73BULL;
            }
            gof_mulhilo(0xD2E7470EE14C6C93ULL, c0, &hi0, &lo0);
            gof_mulhilo(0xCA5A826395121157ULL, c2, &hi1, &lo1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
        }
        s->buf[0] = c0; s->buf[1] = c1; s->buf[2] = c2; s->buf[3] = c3;
        s->pos = 1;
        return c0;
    }

    static inline double gof_open_uniform(gof_philox *s) {
        return ((double)(gof_philox_next(s) >> 12) + 0.5) * (1.0 / 4503599627370496.0);
    }
    """
    ctypedef struct gof_philox:
        pass
    void gof_philox_init(gof_philox *s, uint64_t k0, uint64_t k1) noexcept nogil
    uint64_t gof_philox_next(gof_philox *s) noexcept nogil
    double gof_open_uniform(gof_philox *s) noexcept nogil


cdef enum:
    OK = 0
    CONSTANT = 1
    NONPOSITIVE = 2
    NOCONV = 3
    EXP_WEIGHT = 0
    MLE = 0

cdef double EULER_GAMMA = 0.5772156649015329
cdef double PI = 3.141592653589793
cdef double SQRT_PI = 1.7724538509055159
cdef double K_LO = 0.05, K_HI = 50.0, K_MIN = 1e-4, K_MAX = 1e4
cdef int MAX_NEWTON = 100
cdef int MAX_ATTEMPTS = 64
cdef double ASYMPTOTIC_Z = 8.0
cdef double FORWARD_ZP = 1.0
cdef int MILLER_DEPTH = 200
cdef double CLAMP = 1e-12
# Gaussian weight: observations with x / sqrt(a) <= SERIES_XI use power series
cdef enum:
    SERIES_TERMS = 12
    TAB = 3 * SERIES_TERMS + 3
cdef double SERIES_XI = 0.05
cdef double ASYMPTOTIC_ZP = 16.0
cdef uint64_t REDRAW_STRIDE = (<uint64_t>1) << 40


cdef struct Fit:
    double lam
    double k
    double resid
    double lo
    double hi
    int iters
    int status


# -- Weibull fitting ---------------------------------------------------------

cdef int _centre_logs(const double *x, Py_ssize_t n, double *c, double *ubar) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, cmin, cmax
    for i in range(n):
        if not (x[i] > 0.0 and isfinite(x[i])):
            return NONPOSITIVE
        c[i] = log(x[i])
        s += c[i]
    ubar[0] = s / n
    cmin = cmax = c[0] - ubar[0]
    for i in range(n):
        c[i] -= ubar[0]
        if c[i] < cmin:
            cmin = c[i]
        if c[i] > cmax:
            cmax = c[i]
    if n < 2 or cmax - cmin == 0.0:
        return CONSTANT
    return OK


cdef double _profile(double k, const double *d, Py_ssize_t n, double cmax,
                     double *dh, double *s0_out) noexcept nogil:
    cdef Py_ssize_t i
    cdef double w, s0 = 0.0, s1 = 0.0, m1, var = 0.0
    for i in range(n):
        w = exp(k * d[i])
        s0 += w
        s1 += w * d[i]
    m1 = s1 / s0
    for i in range(n):
        w = exp(k * d[i])
        var += w * (d[i] - m1) * (d[i] - m1)
    var /= s0
    dh[0] = -1.0 / (k * k) - var
    s0_out[0] = s0
    return 1.0 / k - (cmax + m1)


cdef Fit _fit_mle(const double *x, Py_ssize_t n, double *d) noexcept nogil:
    cdef Fit f
    cdef Py_ssize_t i
    cdef double ubar, cmax, lo, hi, h_lo, h_hi, h, dh, s0, k, newton, knew, ss = 0.0
    cdef int it
    cdef bint tiny
    f.lam = f.k = f.resid = f.lo = f.hi = 0.0 / 0.0
    f.iters = 0
    f.status = _centre_logs(x, n, d, &ubar)
    if f.status != OK:
        return f
    cmax = d[0]
    for i in range(n):
        ss += d[i] * d[i]
        if d[i] > cmax:
            cmax = d[i]
    for i in range(n):
        d[i] -= cmax

    lo = K_LO
    hi = K_HI
    h_lo = _profile(lo, d, n, cmax, &dh, &s0)
    while h_lo <= 0.0 and lo > K_MIN:
        hi = lo
        lo = lo / 4.0 if lo / 4.0 > K_MIN else K_MIN
        h_lo = _profile(lo, d, n, cmax, &dh, &s0)
    h_hi = _profile(hi, d, n, cmax, &dh, &s0)
    while h_hi >= 0.0 and hi < K_MAX:
        lo = hi
        hi = hi * 4.0 if hi * 4.0 < K_MAX else K_MAX
        h_hi = _profile(hi, d, n, cmax, &dh, &s0)
    f.lo = lo
    f.hi = hi
    if h_lo <= 0.0 or h_hi >= 0.0:
        f.status = NOCONV
        return f

    k = (PI / sqrt(6.0)) / sqrt(ss / (n - 1))
    if not (k > lo and k < hi):
        k = sqrt(lo * hi)
    f.status = NOCONV
    for it in range(1, MAX_NEWTON + 1):
        f.iters = it
        h = _profile(k, d, n, cmax, &dh, &s0)
        if h == 0.0:
            f.status = OK
            break
        if h > 0.0:
            lo = k
        else:
            hi = k
        newton = k - h / dh
        tiny = fabs(newton - k) <= 4e-16 * k
        if tiny or (newton > lo and newton < hi):
            knew = newton
        elif hi / lo > 4.0:
            knew = sqrt(lo * hi)
        else:
            knew = 0.5 * (lo + hi)
        if tiny or hi - lo <= 4e-16 * k:
            k = knew
            f.status = OK
            break
        k = knew

    h = _profile(k, d, n, cmax, &dh, &s0)
    f.resid = n * h
    if f.status == OK:
        f.k = k
        f.lam = exp(ubar + cmax + log(s0 / n) / k)
    return f


cdef Fit _fit_moments(const double *x, Py_ssize_t n, double *c) noexcept nogil:
    cdef Fit f
    cdef Py_ssize_t i
    cdef double ubar, ss = 0.0
    f.lam = f.k = f.resid = f.lo = f.hi = 0.0 / 0.0
    f.iters = 0
    f.status = _centre_logs(x, n, c, &ubar)
    if f.status != OK:
        return f
    for i in range(n):
        ss += c[i] * c[i]
    f.k = (PI / sqrt(6.0)) / sqrt(ss / (n - 1))
    f.lam = exp(ubar + EULER_GAMMA / f.k)
    return f


# -- statistics ----------------------------------------------------------------

cdef inline void _gauss_moments(double c, double a, double *j0, double *j1, double *j2) noexcept nogil:
    # integrals of t**p exp(-c t - a t**2), p = 0, 1, 2
    cdef double s = sqrt(a), z = c / (2.0 * sqrt(a)), e, h1, g, inv, t
    cdef int m
    e = sp_erfcx(z)
    j0[0] = 0.5 * sqrt(PI / a) * e
    if z > ASYMPTOTIC_Z:
        inv = 1.0 / (z * z)
        t = -0.5 * inv
        h1 = 0.0
        g = 0.0
        for m in range(1, 25):
            if m > 1:
                t = t * (-(2 * m - 1) * 0.5 * inv)
            h1 -= t
            g -= 2 * m * t
        g /= z
    else:
        h1 = 1.0 - SQRT_PI * z * e
        g = SQRT_PI * (1.0 + 2.0 * z * z) * e - 2.0 * z
    j1[0] = h1 / (2.0 * a)
    j2[0] = g / (4.0 * s * s * s)


cdef void _miller_moments(double z, double s, double *J) noexcept nogil:
    # J_p = K_p(z) / s**(p+1) for p = 3..P+1, K_p by backward recurrence
    # normalised with K_0 (the forward recurrence is unstable here)
    cdef int top = SERIES_TERMS + 1
    cdef int n
    cdef double k_next = 0.0, k_cur = 1.0, k_prev, scale, k0
    cdef double K[SERIES_TERMS + 2]
    for n in range(top + MILLER_DEPTH, 0, -1):
        k_prev = (2.0 * k_next + 2.0 * z * k_cur) / n
        if n - 1 <= top:
            K[n - 1] = k_prev
        elif k_prev > 1e100 or k_prev < 1e-100:
            scale = 1e-100 if k_prev > 1e100 else 1e100
            k_prev *= scale
            k_cur *= scale
        k_next = k_cur
        k_cur = k_prev
    k0 = 0.5 * SQRT_PI * sp_erfcx(z) / K[0]
    scale = s * s * s * s
    for n in range(3, top + 1):
        J[n] = K[n] * k0 / scale
        scale *= s


cdef void _gauss_table(double x, double a, const double *M, double *tab) noexcept nogil:
    """Per-observation row: J_p(x) for p = 0..P+1, then the coefficients A_p of
    1 - exp(-x t), then C_p = integral of t**p (1 - exp(-x t)) w, then a small flag."""
    cdef double *J = tab
    cdef double *A = tab + SERIES_TERMS + 2
    cdef double *C = A + SERIES_TERMS
    cdef double s = sqrt(a), q, u, tot, fact, acc
    cdef int p, m, r
    cdef bint small = x / s <= SERIES_XI
    _gauss_moments(x, a, &J[0], &J[1], &J[2])
    if x / (2.0 * s) > ASYMPTOTIC_ZP:
        q = -a / (x * x)
        fact = 2.0
        for p in range(3, SERIES_TERMS + 2):
            fact *= p
            u = 1.0
            tot = 1.0
            for r in range(1, 40):
                u = u * q * ((p + 2 * r - 1) * (p + 2 * r) / <double>r)
                tot += u
            J[p] = fact / pow(x, p + 1) * tot
    elif x / (2.0 * s) > FORWARD_ZP:
        _miller_moments(x / (2.0 * s), s, J)
    else:
        for m in range(2, SERIES_TERMS + 1):
            J[m + 1] = (m * J[m - 1] - x * J[m]) / (2.0 * a)
    u = 1.0
    for p in range(1, SERIES_TERMS + 1):
        u = -u * x / p
        A[p - 1] = -u
    for p in range(1, SERIES_TERMS + 1):
        if small:
            acc = 0.0
            for m in range(SERIES_TERMS, 0, -1):
                acc += A[m - 1] * M[p + m]
            C[p - 1] = acc
        else:
            C[p - 1] = M[p] - J[p]
    C[SERIES_TERMS] = 1.0 if small else 0.0


cdef inline double _dot(const double *u, const double *v) noexcept nogil:
    cdef double acc = 0.0
    cdef int p
    for p in range(SERIES_TERMS - 1, -1, -1):
        acc += u[p] * v[p]
    return acc


cdef inline double _gauss_d0(const double *ti, const double *tj, double xi, double xj) noexcept nogil:
    # D0 through the series in the smaller observation (caller checked one is small)
    if ti[TAB - 1] != 0.0 and (xi <= xj or tj[TAB - 1] == 0.0):
        return _dot(ti + SERIES_TERMS + 2, tj + 2 * SERIES_TERMS + 2)
    return _dot(tj + SERIES_TERMS + 2, ti + 2 * SERIES_TERMS + 2)


cdef double _statistic(const double *x, const double *r, double *tab,
                       Py_ssize_t n, int family, double a) noexcept nogil:
    """Closed-form double sum over i <= j with compensated summation."""
    cdef Py_ssize_t i, j
    cdef double xi, xj, ri, rj, S, d0, dji, djj, j2, ai, aj, aS, term
    cdef double j0s, j1s, j0zero, total = 0.0, comp = 0.0, y, tmp, v
    cdef double M[2 * SERIES_TERMS + 1]
    cdef double *ti
    cdef double *tj
    cdef int p
    if family != EXP_WEIGHT:
        j0zero = 0.5 * sqrt(PI / a)
        for p in range(2 * SERIES_TERMS + 1):
            M[p] = tgamma((p + 1) / 2.0) / (2.0 * pow(a, (p + 1) / 2.0))
        for i in range(n):
            _gauss_table(x[i], a, M, tab + i * TAB)
    for i in range(n):
        xi = x[i]
        ri = r[i]
        ti = tab + i * TAB
        for j in range(i, n):
            xj = x[j]
            rj = r[j]
            S = xi + xj
            if family == EXP_WEIGHT:
                ai = a + xi
                aj = a + xj
                aS = a + S
                d0 = xi * xj * (2.0 * a + S) / (a * ai * aj * aS)
                dji = xj * (2.0 * a + 2.0 * xi + xj) / (ai * ai * aS * aS)
                djj = xi * (2.0 * a + 2.0 * xj + xi) / (aj * aj * aS * aS)
                j2 = 2.0 / (aS * aS * aS)
            else:
                tj = tab + j * TAB
                _gauss_moments(S, a, &j0s, &j1s, &j2)
                if ti[TAB - 1] != 0.0 or tj[TAB - 1] != 0.0:
                    d0 = _gauss_d0(ti, tj, xi, xj)
                else:
                    d0 = j0zero - ti[0] - tj[0] + j0s
                if tj[TAB - 1] != 0.0:
                    dji = _dot(tj + SERIES_TERMS + 2, ti + 2)
                else:
                    dji = ti[1] - j1s
                if ti[TAB - 1] != 0.0:
                    djj = _dot(ti + SERIES_TERMS + 2, tj + 2)
                else:
                    djj = tj[1] - j1s
            term = 2.0 * (ri * rj * d0 - rj * dji - ri * djj + j2)
            if i == j:
                term *= 0.5
            y = term - comp
            tmp = total + y
            comp = (tmp - total) - y
            total = tmp
    v = total / n
    if fabs(v) <= CLAMP:
        v = 0.0
    return v


cdef void _r_terms(const double *x, Py_ssize_t n, double lam, double k, double *r) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        r[i] = (k * exp(k * log(x[i] / lam)) - k + 1.0) / x[i]


cdef void _all_statistics(const double *x, Py_ssize_t n, double lam, double k,
                          const int64_t *family, const double *a, Py_ssize_t nw,
                          double *out, double *ws) noexcept nogil:
    cdef Py_ssize_t w
    _r_terms(x, n, lam, k, ws)
    for w in range(nw):
        out[w] = _statistic(x, ws, ws + n, n, <int>family[w], a[w])


# -- Python surface ------------------------------------------------------------

def philox_raw(uint64_t seed, uint64_t stream, Py_ssize_t count):
    cdef gof_philox s
    cdef Py_ssize_t i
    out = np.empty(count, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    gof_philox_init(&s, seed, stream)
    for i in range(count):
        o[i] = gof_philox_next(&s)
    return out


cdef inline void _draw(uint64_t seed, uint64_t stream, Py_ssize_t n, double lam, double k,
                       double *x) noexcept nogil:
    cdef gof_philox s
    cdef Py_ssize_t i
    cdef double inv_k = 1.0 / k
    gof_philox_init(&s, seed, stream)
    for i in range(n):
        x[i] = lam * pow(-log(gof_open_uniform(&s)), inv_k)


def weibull_draws(uint64_t seed, uint64_t stream, Py_ssize_t n, double lam, double k):
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        _draw(seed, stream, n, lam, k, &o[0])
    return out


def fit_mle_rows(X):
    cdef double[:, ::1] x = np.array(np.atleast_2d(X), dtype=np.float64, order="C")
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], j
    lam = np.empty(m); k = np.empty(m); resid = np.empty(m)
    lo = np.empty(m); hi = np.empty(m)
    iters = np.empty(m, dtype=np.int64); status = np.empty(m, dtype=np.int64)
    cdef double[::1] vl = lam, vk = k, vr = resid, vlo = lo, vhi = hi
    cdef int64_t[::1] vi = iters, vs = status
    cdef double *d = <double *>malloc(max(n, 1) * sizeof(double))
    cdef Fit f
    try:
        with nogil:
            for j in range(m):
                f = _fit_mle(&x[j, 0], n, d)
                vl[j] = f.lam; vk[j] = f.k; vr[j] = f.resid
                vlo[j] = f.lo; vhi[j] = f.hi; vi[j] = f.iters; vs[j] = f.status
    finally:
        free(d)
    return lam, k, iters, resid, lo, hi, status


def fit_moments_rows(X):
    cdef double[:, ::1] x = np.array(np.atleast_2d(X), dtype=np.float64, order="C")
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], j
    lam = np.empty(m); k = np.empty(m); status = np.empty(m, dtype=np.int64)
    cdef double[::1] vl = lam, vk = k
    cdef int64_t[::1] vs = status
    cdef double *c = <double *>malloc(max(n, 1) * sizeof(double))
    cdef Fit f
    try:
        with nogil:
            for j in range(m):
                f = _fit_moments(&x[j, 0], n, c)
                vl[j] = f.lam; vk[j] = f.k; vs[j] = f.status
    finally:
        free(c)
    return lam, k, status


def r_terms(X, lam, k):
    from ._fallback import r_terms as _r
    return _r(X, lam, k)


def statistics_rows(X, lam, k, family, a):
    cdef double[:, ::1] x = np.array(np.atleast_2d(X), dtype=np.float64, order="C")
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], j
    cdef double[::1] vl = np.array(np.broadcast_to(lam, (m,)), dtype=np.float64)
    cdef double[::1] vk = np.array(np.broadcast_to(k, (m,)), dtype=np.float64)
    cdef int64_t[::1] fam = np.array(family, dtype=np.int64, order="C")
    cdef double[::1] va = np.array(a, dtype=np.float64, order="C")
    cdef Py_ssize_t nw = fam.shape[0]
    out = np.zeros((m, nw))
    cdef double[:, ::1] o = out
    if nw == 0 or m == 0:
        return out
    cdef double *ws = <double *>malloc((TAB + 1) * n * sizeof(double))
    try:
        with nogil:
            for j in range(m):
                _all_statistics(&x[j, 0], n, vl[j], vk[j], &fam[0], &va[0], nw, &o[j, 0], ws)
    finally:
        free(ws)
    return out


def bootstrap(seeds, lam, k, Py_ssize_t n, Py_ssize_t b, int estimator, family, a, int threads=0):
    cdef uint64_t[::1] vseed = np.array(seeds, dtype=np.uint64, order="C")
    cdef double[::1] vl = np.array(lam, dtype=np.float64, order="C")
    cdef double[::1] vk = np.array(k, dtype=np.float64, order="C")
    cdef int64_t[::1] fam = np.array(family, dtype=np.int64, order="C")
    cdef double[::1] va = np.array(a, dtype=np.float64, order="C")
    cdef Py_ssize_t m = vseed.shape[0], nw = fam.shape[0], total = m * b, t, jj, ii, w
    out = np.full((m, b, nw), np.nan)
    task_redraws = np.zeros(total, dtype=np.int64)
    task_failed = np.zeros(total, dtype=np.int64)
    cdef double[:, :, ::1] o = out
    cdef int64_t[::1] vred = task_redraws, vfail = task_failed
    cdef int nthreads = threads if threads > 0 else openmp.omp_get_max_threads()
    cdef double *buf
    cdef Fit f
    cdef int attempt
    if total == 0 or nw == 0:
        return out, np.zeros(m, dtype=np.int64), np.zeros(m, dtype=np.int64)
    with nogil, parallel(num_threads=nthreads):
        buf = <double *>malloc((TAB + 3) * n * sizeof(double))
        for t in prange(total, schedule="dynamic", chunksize=4):
            jj = t // b
            ii = t % b
            for attempt in range(MAX_ATTEMPTS):
                _draw(vseed[jj], <uint64_t>ii + <uint64_t>attempt * REDRAW_STRIDE, n, vl[jj], vk[jj], buf)
                if estimator == MLE:
                    f = _fit_mle(buf, n, buf + n)
                else:
                    f = _fit_moments(buf, n, buf + n)
                if f.status == OK:
                    break
                vred[t] += 1
            if f.status == OK:
                _all_statistics(buf, n, f.lam, f.k, &fam[0], &va[0], nw, &o[jj, ii, 0], buf + 2 * n)
            else:
                vfail[t] = 1
        free(buf)
    return (
        out,
        task_redraws.reshape(m, b).sum(axis=1) - task_failed.reshape(m, b).sum(axis=1),
        task_failed.reshape(m, b).sum(axis=1),
    )
