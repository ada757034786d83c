# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors ``irsfso._kernels_py`` one-to-one."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, sin, fabs, pow, ceil
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    """
    static inline uint64_t irsfso_mulhilo(uint64_t a, uint64_t b, uint64_t *hi) {
        unsigned __int128 p = (unsigned __int128)a * (unsigned __int128)b;
        *hi = (uint64_t)(p >> 64);
        return (uint64_t)p;
    }
    """
    uint64_t irsfso_mulhilo(uint64_t a, uint64_t b, uint64_t *hi) nogil

BACKEND = "cython"

cdef uint64_t M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t M1 = 0xCA5A826395121157ULL
cdef uint64_t W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t W1 = 0xBB67AE8584CAA73BULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef double PI = 3.141592653589793
cdef int MAX_GAMMA_ATTEMPTS = 64


cdef inline void _philox(uint64_t *c, uint64_t k0, uint64_t k1) noexcept nogil:
    cdef uint64_t hi0, hi1, lo0, lo1
    cdef int r
    for r in range(10):
        lo0 = irsfso_mulhilo(M0, c[0], &hi0)
        lo1 = irsfso_mulhilo(M1, c[2], &hi1)
        c[0] = hi1 ^ c[1] ^ k0
        c[1] = lo1
        c[2] = hi0 ^ c[3] ^ k1
        c[3] = lo0
        k0 += W0
        k1 += W1


cdef inline double _unit(uint64_t w) noexcept nogil:
    return (<double>(w >> 11) + 0.5) * TWO_M53


cdef inline void _block(uint64_t seed, uint64_t counter, uint64_t stream,
                        uint64_t lane, double *u) noexcept nogil:
    cdef uint64_t c[4]
    c[0] = counter
    c[1] = stream
    c[2] = lane
    c[3] = 0
    _philox(c, seed, 0)
    u[0] = _unit(c[0])
    u[1] = _unit(c[1])
    u[2] = _unit(c[2])
    u[3] = _unit(c[3])


cdef inline double _box_muller(double u1, double u2) noexcept nogil:
    return sqrt(-2.0 * log(u1)) * cos(2.0 * PI * u2)


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64-10 block function; returns an ``(n, 4)`` uint64 array."""
    arrs = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3)))
    cdef cnp.uint64_t[::1] a0 = np.array(arrs[0], dtype=np.uint64).ravel()
    cdef cnp.uint64_t[::1] a1 = np.array(arrs[1], dtype=np.uint64).ravel()
    cdef cnp.uint64_t[::1] a2 = np.array(arrs[2], dtype=np.uint64).ravel()
    cdef cnp.uint64_t[::1] a3 = np.array(arrs[3], dtype=np.uint64).ravel()
    cdef Py_ssize_t n = a0.shape[0], i
    out = np.empty((n, 4), dtype=np.uint64)
    cdef cnp.uint64_t[:, ::1] o = out
    cdef uint64_t kk0 = <uint64_t>k0, kk1 = <uint64_t>k1
    cdef uint64_t c[4]
    with nogil:
        for i in range(n):
            c[0] = a0[i]; c[1] = a1[i]; c[2] = a2[i]; c[3] = a3[i]
            _philox(c, kk0, kk1)
            o[i, 0] = c[0]; o[i, 1] = c[1]; o[i, 2] = c[2]; o[i, 3] = c[3]
    return out


def uniform_blocks(seed, counters, streams, lane):
    """Four uniforms per (counter, stream) pair, shape ``(n, 4)``."""
    arrs = np.broadcast_arrays(np.asarray(counters, dtype=np.uint64),
                               np.asarray(streams, dtype=np.uint64))
    cdef cnp.uint64_t[::1] cs = np.array(arrs[0], dtype=np.uint64).ravel()
    cdef cnp.uint64_t[::1] ss = np.array(arrs[1], dtype=np.uint64).ravel()
    cdef Py_ssize_t n = cs.shape[0], i
    out = np.empty((n, 4), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint64_t s = <uint64_t>seed, ln = <uint64_t>lane
    with nogil:
        for i in range(n):
            _block(s, cs[i], ss[i], ln, &o[i, 0])
    return out


def rayleigh_trials(seed, start, Py_ssize_t n, double sigma, lane=0):
    """Rayleigh(sigma) variate for each trial in ``[start, start + n)``."""
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>start, ln = <uint64_t>lane
    cdef double u[4]
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _block(s, 0, st + <uint64_t>i, ln, u)
            o[i] = sigma * sqrt(-2.0 * log(u[0]))
    return out


def normal_trials(seed, start, Py_ssize_t n, lane):
    """Standard normal variate per trial, from counter 0 of ``lane``."""
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>start, ln = <uint64_t>lane
    cdef double u[4]
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _block(s, 0, st + <uint64_t>i, ln, u)
            o[i] = _box_muller(u[0], u[1])
    return out


def gamma_trials(seed, start, Py_ssize_t n, double shape, double scale, lane):
    """Gamma(shape, scale) per trial by Marsaglia-Tsang rejection."""
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>start, ln = <uint64_t>lane
    cdef bint boost = shape < 1.0
    cdef double a = shape + 1.0 if boost else shape
    cdef double d = a - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double u[4]
    cdef double x, v, g
    cdef Py_ssize_t i
    cdef int attempt
    cdef bint failed = False
    with nogil:
        for i in range(n):
            g = -1.0
            for attempt in range(MAX_GAMMA_ATTEMPTS):
                _block(s, <uint64_t>attempt, st + <uint64_t>i, ln, u)
                x = _box_muller(u[0], u[1])
                v = 1.0 + c * x
                if v <= 0.0:
                    continue
                v = v * v * v
                if (u[2] < 1.0 - 0.0331 * x * x * x * x
                        or log(u[2]) < 0.5 * x * x + d * (1.0 - v + log(v))):
                    g = d * v
                    if boost:
                        g = g * pow(u[3], 1.0 / shape)
                    break
            if g < 0.0:
                failed = True
                break
            o[i] = g * scale
    if failed:
        raise RuntimeError("gamma sampler exceeded its attempt budget")
    return out


def hf_sum(y, weight, amp, phase, double rx_y, double rx_z, double k, bint obliquity):
    """Huygens-Fresnel superposition sum for one receiver point."""
    cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] ww = np.ascontiguousarray(weight, dtype=np.float64)
    cdef double[::1] aa = np.ascontiguousarray(amp, dtype=np.float64)
    cdef double[::1] pp = np.ascontiguousarray(phase, dtype=np.float64)
    cdef Py_ssize_t n = yy.shape[0], j
    cdef double re = 0.0, im = 0.0, dy, r, mag, tot
    with nogil:
        for j in range(n):
            dy = rx_y - yy[j]
            r = sqrt(dy * dy + rx_z * rx_z)
            mag = ww[j] * aa[j] / sqrt(r)
            if obliquity:
                mag = mag * (rx_z / r)
            tot = pp[j] + k * r
            re += mag * cos(tot)
            im += mag * sin(tot)
    return complex(re, im)


def hyp1f2(double a, double b1, double b2, x, double tol, int max_terms):
    """Term-recurrence series for 1F2(a; b1, b2; x), vectorized over ``x``."""
    cdef double[::1] xs = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    cdef Py_ssize_t m = xs.shape[0], i
    val = np.empty(m, dtype=np.float64)
    big = np.empty(m, dtype=np.float64)
    nt = np.empty(m, dtype=np.int64)
    cdef double[::1] v = val
    cdef double[::1] bg = big
    cdef int64_t[::1] nn = nt
    cdef double s, t, xi, mx
    cdef int n, n_min
    with nogil:
        for i in range(m):
            xi = xs[i]
            s = 1.0
            t = 1.0
            mx = 1.0
            nn[i] = -1
            n_min = <int>ceil(sqrt(fabs(xi)))
            for n in range(max_terms):
                t = t * ((a + n) * xi / ((b1 + n) * (b2 + n) * (n + 1.0)))
                s = s + t
                if fabs(t) > mx:
                    mx = fabs(t)
                if (fabs(t) <= tol * fabs(s) and n + 1 >= n_min) or t == 0.0:
                    nn[i] = n + 2
                    break
            v[i] = s
            bg[i] = mx
    return val, big, nt
