# cython: language_level=3
"""Compiled versions of the kernels in :mod:`bslp._kernels_py`.

Same algorithms, scalar loops instead of masked array passes.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, cos, acos, cbrt, isfinite

cnp.import_array()

cdef int NEWTON_MAX_ITERS = 100
cdef double NEWTON_RTOL = 1e-14
cdef double TWO_THIRDS = 2.0 / 3.0


cdef inline double _norm(const double[::1] x, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef double scale = 0.0, acc = 0.0, r
    cdef Py_ssize_t j
    for j in range(lo, hi):
        if fabs(x[j]) > scale:
            scale = fabs(x[j])
    if scale == 0.0:
        return 0.0
    for j in range(lo, hi):
        r = fabs(x[j]) / scale
        acc += r * r
    return scale * sqrt(acc)


cdef inline double _half_closed(double c, double tau) noexcept nogil:
    cdef double arg = -(pow(3.0, 1.5) / 4.0) * tau * pow(c, -1.5)
    if arg < -1.0:
        arg = -1.0
    elif arg > 1.0:
        arg = 1.0
    return (2.0 * c / 3.0) * (1.0 + cos(TWO_THIRDS * acos(arg)))


cdef inline double _two_thirds_closed(double c, double tau) noexcept nogil:
    cdef double k = 2.0 * tau / 3.0
    cdef double c2 = c * c
    cdef double k3 = k * k * k / 27.0
    cdef double q = c2 * c2 / 256.0 - k3
    if q < 0.0:
        q = 0.0
    cdef double big = c2 / 16.0 + sqrt(q)
    cdef double m = cbrt(big) + cbrt(k3 / big)
    cdef double r2m = sqrt(2.0 * m)
    cdef double disc = 2.0 * c / r2m - 2.0 * m
    if disc < 0.0:
        disc = 0.0
    cdef double r = 0.5 * (r2m + sqrt(disc))
    return r * r * r


cdef inline double _newton(double c, double tau, double p, double lo) noexcept nogil:
    cdef double s = c, hi = c, f, fp, new
    cdef double a = tau * p
    cdef double b = tau * p * (1.0 - p)
    cdef int it
    for it in range(NEWTON_MAX_ITERS):
        f = s - c + a * pow(s, p - 1.0)
        if fabs(f) <= NEWTON_RTOL * c:
            break
        if f > 0:
            hi = s
        else:
            lo = s
        fp = 1.0 - b * pow(s, p - 2.0)
        new = s - f / fp
        if fp <= 0 or not isfinite(new) or new < lo or new > hi:
            new = 0.5 * (lo + hi)
        if new == s:
            break
        s = new
    return s


cdef inline double _prox_one(double c, double tau, double p, double s_t,
                             double c_star, int newton_only) noexcept nogil:
    if p == 1.0:
        return c - tau if c > tau else 0.0
    if c <= c_star:
        return 0.0
    if not newton_only and p == 0.5:
        return _half_closed(c, tau)
    if not newton_only and p == TWO_THIRDS:
        return _two_thirds_closed(c, tau)
    return _newton(c, tau, p, s_t)


cdef void _threshold(double tau, double p, double* s_t, double* c_star) noexcept nogil:
    if p == 1.0:
        s_t[0] = 0.0
        c_star[0] = tau
    else:
        s_t[0] = pow(2.0 * tau * (1.0 - p), 1.0 / (2.0 - p))
        c_star[0] = s_t[0] + tau * p * pow(s_t[0], p - 1.0)


def block_norms(x, offsets):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t M = off.shape[0] - 1, i
    out = np.empty(M, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(M):
            ov[i] = _norm(xv, off[i], off[i + 1])
    return out


def prox_scalar_array(c, double tau, double p, method="auto"):
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64).ravel()
    cdef Py_ssize_t n = cv.shape[0], i
    cdef int newton_only = 1 if method == "newton" else 0
    cdef double s_t, c_star
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        _threshold(tau, p, &s_t, &c_star)
        for i in range(n):
            ov[i] = _prox_one(cv[i], tau, p, s_t, c_star, newton_only)
    return out.reshape(np.shape(c))


def block_prox(a, offsets, double tau, double p):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t M = off.shape[0] - 1, i, j
    cdef double s_t, c_star, c, s, ratio
    out = np.zeros(av.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        _threshold(tau, p, &s_t, &c_star)
        for i in range(M):
            c = _norm(av, off[i], off[i + 1])
            if c == 0.0:
                continue
            s = _prox_one(c, tau, p, s_t, c_star, 0)
            if s > 0.0:
                ratio = s / c
                for j in range(off[i], off[i + 1]):
                    ov[j] = av[j] * ratio
    return out
