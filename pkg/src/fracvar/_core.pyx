# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: covariance assembly and compensated increment sums.

Mirrors ``_fallback`` function for function; ``_backend`` picks whichever
imports.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs

cnp.import_array()

DEF FBM = 0
DEF BIFBM = 1
DEF TRIFBM = 2
DEF NFBM = 3


cdef inline void _neumaier_add(double x, double* s, double* c) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


cdef inline double _nfbm_entry(Py_ssize_t i, Py_ssize_t j, double s, double t,
                               double two_h, double scale, const double[::1] binom,
                               const double[:, ::1] pw, const double[:, ::1] pc) noexcept nogil:
    # pw[m, i] = x_i^m and pc[m, i] = x_i^(2H - m), precomputed per point
    cdef Py_ssize_t m
    cdef double acc = 0.0, sign = 1.0
    for m in range(binom.shape[0]):
        acc += sign * binom[m] * (pw[m, j] * pc[m, i] + pw[m, i] * pc[m, j])
        sign = -sign
    return scale * (pow(fabs(t - s), two_h) - acc)


def covariance_matrix(int family, double hurst, double k, double scale,
                      const double[::1] binom, const double[::1] points):
    """Fill the kernel matrix over ``points``; upper triangle computed, then mirrored."""
    cdef Py_ssize_t n = points.shape[0], i, j
    cdef double two_h = 2.0 * hurst
    cdef double s, t, v
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    p_arr = np.empty(n, dtype=np.float64)
    q_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] p = p_arr
    cdef double[::1] q = q_arr
    cdef Py_ssize_t nb = binom.shape[0] if family == NFBM else 0, m
    pw_arr = np.empty((nb, n), dtype=np.float64)
    pc_arr = np.empty((nb, n), dtype=np.float64)
    cdef double[:, ::1] pw = pw_arr
    cdef double[:, ::1] pc = pc_arr
    for i in range(n):
        p[i] = pow(points[i], two_h)
        # (t^{2H})^K rather than t^{2HK}: exact cancellation at t = 0
        q[i] = pow(p[i], k)
        for m in range(nb):
            pw[m, i] = pow(points[i], <double>m)
            pc[m, i] = pow(points[i], two_h - m)
    with nogil:
        for i in range(n):
            s = points[i]
            for j in range(i, n):
                t = points[j]
                if family == FBM:
                    v = 0.5 * ((p[i] + p[j]) - pow(fabs(t - s), two_h))
                elif family == BIFBM:
                    v = scale * (pow(p[i] + p[j], k) - pow(pow(fabs(t - s), two_h), k))
                elif family == TRIFBM:
                    v = (q[i] + q[j]) - pow(p[i] + p[j], k)
                else:
                    v = _nfbm_entry(i, j, s, t, two_h, scale, binom, pw, pc)
                out[i, j] = v
                out[j, i] = v
    return out_arr


def compensated_sum(const double[::1] x):
    cdef double s = 0.0, c = 0.0
    cdef Py_ssize_t i
    with nogil:
        for i in range(x.shape[0]):
            _neumaier_add(x[i], &s, &c)
    return s + c


def power_increment_sum(const double[::1] values, double p):
    """Sum of ``|x[i] - x[i-1]|**p``."""
    cdef double s = 0.0, c = 0.0, d
    cdef Py_ssize_t i
    with nogil:
        for i in range(1, values.shape[0]):
            d = values[i] - values[i - 1]
            if p == 2.0:
                d = d * d
            else:
                d = pow(fabs(d), p)
            _neumaier_add(d, &s, &c)
    return s + c


def weighted_sq_increment_sum(const double[::1] values, const double[::1] times,
                              double weight_exponent):
    """Sum of ``(x[i] - x[i-1])**2 / (t[i] - t[i-1])**weight_exponent``."""
    cdef double s = 0.0, c = 0.0, d
    cdef Py_ssize_t i
    with nogil:
        for i in range(1, values.shape[0]):
            d = values[i] - values[i - 1]
            d = d * d
            if weight_exponent != 0.0:
                d = d / pow(times[i] - times[i - 1], weight_exponent)
            _neumaier_add(d, &s, &c)
    return s + c


def stencil_sq_sum(const double[::1] values, const double[::1] coeffs,
                   Py_ssize_t start, Py_ssize_t step, Py_ssize_t stride,
                   Py_ssize_t count):
    """Sum over m < count of (sum_i coeffs[i] * values[start + m*stride + i*step])**2."""
    cdef double s = 0.0, c = 0.0, d
    cdef Py_ssize_t m, i, base
    with nogil:
        for m in range(count):
            base = start + m * stride
            d = 0.0
            for i in range(coeffs.shape[0]):
                d += coeffs[i] * values[base + i * step]
            _neumaier_add(d * d, &s, &c)
    return s + c
