# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, sqrt, sin, pow, floor, fabs, M_PI

cnp.import_array()


cdef inline double _eval1(double r, const double[::1] vals, const double[::1] d1,
                          const double[::1] d2, double r_min, double r_max,
                          double log_ratio, double f0, double f1, double f2, double b,
                          double npow, int deriv, const double[::1] nodes,
                          double hfac) noexcept nogil:
    cdef Py_ssize_t n = vals.shape[0], i
    cdef double x, ra, hgt, t, t2, t3, t4, t5, ya, yb, da, db, ea, eb
    if r < r_min:
        if deriv:
            return f1 + 2.0 * f2 * r
        return f0 + r * (f1 + f2 * r)
    if r > r_max:
        if deriv:
            return -npow * b * pow(r, -npow - 1.0)
        return b * pow(r, -npow)
    x = log(r / r_min) / log_ratio
    i = <Py_ssize_t>floor(x)
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    ra = nodes[i]
    hgt = ra * hfac
    t = (r - ra) / hgt
    ya = vals[i]
    yb = vals[i + 1]
    da = d1[i] * hgt
    db = d1[i + 1] * hgt
    ea = d2[i] * hgt * hgt
    eb = d2[i + 1] * hgt * hgt
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    if deriv:
        return ((-30 * t2 + 60 * t3 - 30 * t4) * (ya - yb)
                + (1 - 18 * t2 + 32 * t3 - 15 * t4) * da
                + (t - 4.5 * t2 + 6 * t3 - 2.5 * t4) * ea
                + (-12 * t2 + 28 * t3 - 15 * t4) * db
                + (1.5 * t2 - 4 * t3 + 2.5 * t4) * eb) / hgt
    t5 = t4 * t
    return (ya + (10 * t3 - 15 * t4 + 6 * t5) * (yb - ya)
            + (t - 6 * t3 + 8 * t4 - 3 * t5) * da
            + (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5) * ea
            + (-4 * t3 + 7 * t4 - 3 * t5) * db
            + (0.5 * t3 - t4 + 0.5 * t5) * eb)


def profile_eval(r, const double[::1] vals, const double[::1] d1, const double[::1] d2,
                 double r_min, double r_max, double log_ratio, double f0, double f1,
                 double f2, double b, double npow, int deriv=0):
    rr = np.ascontiguousarray(np.ravel(r), dtype=np.float64)
    cdef const double[::1] rv = rr
    cdef Py_ssize_t n = rv.shape[0], j
    cdef const double[::1] nodes = r_min * np.exp(np.arange(vals.shape[0]) * log_ratio)
    cdef double hfac = exp(log_ratio) - 1.0
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for j in range(n):
            o[j] = _eval1(rv[j], vals, d1, d2, r_min, r_max, log_ratio, f0, f1, f2, b,
                          npow, deriv, nodes, hfac)
    return out.reshape(np.shape(r))


def bubble_sum(points, centers, double lam, double amp, double power,
               const double[::1] vals, const double[::1] d1, const double[::1] d2,
               double r_min, double r_max, double log_ratio, double f0, double f1,
               double f2, double b, double npow):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], M = C.shape[0], dim = P.shape[1], i, j, a
    cdef const double[::1] nodes = r_min * np.exp(np.arange(vals.shape[0]) * log_ratio)
    cdef double hfac = exp(log_ratio) - 1.0
    out = np.zeros(n)
    cdef double[::1] o = out
    cdef double d2s, diff, f, acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(M):
                d2s = 0.0
                for a in range(dim):
                    diff = P[i, a] - C[j, a]
                    d2s = d2s + diff * diff
                f = _eval1(lam * sqrt(d2s), vals, d1, d2, r_min, r_max, log_ratio,
                           f0, f1, f2, b, npow, 0, nodes, hfac)
                if power == 1.0:
                    acc = acc + amp * fabs(f)
                else:
                    acc = acc + pow(amp * fabs(f), power)
            o[i] = acc
    return out


def polygon_sum(Py_ssize_t k, double h, double power, bint cross):
    cdef Py_ssize_t j
    cdef double s, acc = 0.0, c2 = 1.0 - h * h
    with nogil:
        if cross:
            for j in range(k):
                s = sin(M_PI * j / k)
                acc = acc + pow(4.0 * c2 * s * s + 4.0 * h * h, -0.5 * power)
        else:
            for j in range(1, k):
                s = sin(M_PI * j / k)
                acc = acc + pow(2.0 * sqrt(c2) * s, -power)
    return acc
