# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the builtin interval maps.

Semantics mirror ``_pykernels`` operation for operation so both backends
produce the same floating point results.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs, pow

cnp.import_array()

cdef enum:
    DOUBLING = 0
    TENT = 1
    QUADRATIC = 2
    MP = 3


cdef inline double _forward(int kind, double p, double x) noexcept nogil:
    if kind == DOUBLING:
        if x < 0.5:
            return 2.0 * x
        return 2.0 * x - 1.0
    elif kind == TENT:
        if x < 0.5:
            return p * x
        return p * (1.0 - x)
    elif kind == QUADRATIC:
        return 1.0 - p * x * x
    else:
        if x < 0.5:
            return x + pow(2.0, p) * pow(x, 1.0 + p)
        return 2.0 * x - 1.0


cdef inline double _logdf(int kind, double p, double x) noexcept nogil:
    if kind == DOUBLING:
        return log(2.0)
    elif kind == TENT:
        return log(p)
    elif kind == QUADRATIC:
        return log(fabs(2.0 * p * x))
    else:
        if x < 0.5:
            return log(1.0 + (1.0 + p) * pow(2.0, p) * pow(x, p))
        return log(2.0)


def forward(int kind, double p, double x):
    return _forward(kind, p, x)


def birkhoff_log_derivative(int kind, double p, double x0, long burn_in, long n):
    """Sum of log|f'| over n iterates after burn_in; returns (sum, final point)."""
    cdef double x = x0
    cdef double s = 0.0
    cdef long i
    with nogil:
        for i in range(burn_in):
            x = _forward(kind, p, x)
        for i in range(n):
            s += _logdf(kind, p, x)
            x = _forward(kind, p, x)
    return s, x


def orbit_histogram(int kind, double p, double x0, long burn_in, long n,
                    double lo, double hi, long bins):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(bins, dtype=np.int64)
    cdef cnp.int64_t[:] c = counts
    cdef double x = x0
    cdef double scale = bins / (hi - lo)
    cdef long i, k
    with nogil:
        for i in range(burn_in):
            x = _forward(kind, p, x)
        for i in range(n):
            k = <long>((x - lo) * scale)
            if k < 0:
                k = 0
            elif k >= bins:
                k = bins - 1
            c[k] += 1
            x = _forward(kind, p, x)
    return counts


cdef double _mp_left_inverse(double y, double p) noexcept nogil:
    cdef double lo = 0.0
    cdef double hi = y if y < 0.5 else 0.5
    cdef double mid, g, dg, x, c = pow(2.0, p)
    cdef int k
    if y <= 0.0:
        return 0.0
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # adjacent doubles; the tolerance underflows for subnormal y
        if mid + c * pow(mid, 1.0 + p) < y:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for k in range(2):
        g = x + c * pow(x, 1.0 + p) - y
        dg = 1.0 + (1.0 + p) * c * pow(x, p)
        x = x - g / dg
    return x


def mp_left_inverse(double y, double p):
    return _mp_left_inverse(y, p)


def mp_left_preimages(double p, double y0, long n):
    """x_k = T_L^{-k}(y0) for k = 1..n."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef double y = y0
    cdef long k
    with nogil:
        for k in range(n):
            y = _mp_left_inverse(y, p)
            o[k] = y
    return out


def hofbauer_occupation(int kind, double p, cnp.int64_t[:, :] trans, double[:] breaks,
                        long level0, double x0, long n):
    """Occupation counts of an orbit pushed through a Hofbauer transition table.

    An unknown transition (-1) sends the orbit back to level 0 and is counted
    as overflow.
    """
    cdef long nlev = trans.shape[0]
    cdef long nb = breaks.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(nlev, dtype=np.int64)
    cdef cnp.int64_t[:] c = counts
    cdef long overflow = 0
    cdef long level = level0
    cdef long i, j, cell, nxt
    cdef double x = x0
    with nogil:
        for i in range(n):
            c[level] += 1
            cell = 0
            for j in range(nb):
                if x >= breaks[j]:
                    cell = j + 1
            nxt = trans[level, cell]
            if nxt < 0:
                overflow += 1
                nxt = 0
            level = nxt
            x = _forward(kind, p, x)
    return counts, overflow


def mp_left_inverse_array(double[:] y, double p):
    cdef long n = y.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef long k
    with nogil:
        for k in range(n):
            o[k] = _mp_left_inverse(y[k], p)
    return out
