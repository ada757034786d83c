"""Pure numpy implementation of the hot kernels.

Signatures and results mirror the compiled ``_kernels`` extension. Integer
outputs (Philox words) are bit-identical between the two; floating-point
outputs agree to a few ulps (libm vs numpy transcendental functions).
"""

import numpy as np

BACKEND = "python"

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0
_ROUNDS = 10
_MAX_GAMMA_ATTEMPTS = 64


def _mulhilo(a, m):
    """Full 64x64 -> 128-bit product of array ``a`` with constant ``m``."""
    m_lo = m & _LO32
    m_hi = m >> _S32
    a_lo = a & _LO32
    a_hi = a >> _S32
    p0 = a_lo * m_lo
    p1 = a_lo * m_hi
    p2 = a_hi * m_lo
    p3 = a_hi * m_hi
    mid = (p0 >> _S32) + (p1 & _LO32) + (p2 & _LO32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    return hi, a * m


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64-10 block function; returns an ``(n, 4)`` uint64 array."""
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3))
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    c0, c1, c2, c3 = (np.array(c, dtype=np.uint64).ravel() for c in (c0, c1, c2, c3))
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    with np.errstate(over="ignore"):
        for _ in range(_ROUNDS):
            hi0, lo0 = _mulhilo(c0, _M0)
            hi1, lo1 = _mulhilo(c2, _M1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return np.stack([c0, c1, c2, c3], axis=1)


def _to_unit(words):
    # 53 high bits, centred in the cell: strictly inside (0, 1)
    return ((words >> _S11).astype(np.float64) + 0.5) * _TWO_M53


def uniform_blocks(seed, counters, streams, lane):
    """Four uniforms per (counter, stream) pair, shape ``(n, 4)``."""
    counters = np.asarray(counters, dtype=np.uint64)
    streams = np.asarray(streams, dtype=np.uint64)
    words = philox4x64(counters, streams, np.uint64(lane), np.uint64(0),
                       np.uint64(seed), np.uint64(0))
    return _to_unit(words)


def _trial_ids(start, n):
    return np.uint64(start) + np.arange(n, dtype=np.uint64)


def _box_muller(u1, u2):
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def rayleigh_trials(seed, start, n, sigma, lane=0):
    """Rayleigh(sigma) variate for each trial in ``[start, start + n)``."""
    u = uniform_blocks(seed, 0, _trial_ids(start, n), lane)
    return sigma * np.sqrt(-2.0 * np.log(u[:, 0]))


def normal_trials(seed, start, n, lane):
    """Standard normal variate per trial, from counter 0 of ``lane``."""
    u = uniform_blocks(seed, 0, _trial_ids(start, n), lane)
    return _box_muller(u[:, 0], u[:, 1])


def gamma_trials(seed, start, n, shape, scale, lane):
    """Gamma(shape, scale) per trial by Marsaglia-Tsang rejection.

    Attempt ``j`` of trial ``i`` consumes counter ``j`` of ``lane`` in stream
    ``i``, so each trial's variate is independent of how trials are batched.
    """
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    ids = _trial_ids(start, n)
    out = np.empty(n, dtype=np.float64)
    pending = np.arange(n)
    for attempt in range(_MAX_GAMMA_ATTEMPTS):
        if pending.size == 0:
            break
        u = uniform_blocks(seed, attempt, ids[pending], lane)
        x = _box_muller(u[:, 0], u[:, 1])
        v = 1.0 + c * x
        ok = v > 0.0
        v = np.where(ok, v * v * v, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = ok & ((u[:, 2] < 1.0 - 0.0331 * x ** 4)
                           | (np.log(u[:, 2]) < 0.5 * x * x + d * (1.0 - v + np.log(v))))
        g = d * v
        if boost:
            g = g * u[:, 3] ** (1.0 / shape)
        out[pending[accept]] = g[accept] * scale
        pending = pending[~accept]
    if pending.size:
        raise RuntimeError("gamma sampler exceeded its attempt budget")
    return out


def hf_sum(y, weight, amp, phase, rx_y, rx_z, k, obliquity):
    """Huygens-Fresnel superposition sum for one receiver point.

    Returns sum_j weight_j amp_j cos_j exp(i(phase_j + k r_j)) / sqrt(r_j),
    where r_j is the distance from ``(y_j, 0)`` to ``(rx_y, rx_z)`` and cos_j
    is the inclination ``rx_z / r_j`` (or 1 when ``obliquity`` is false).
    """
    dy = rx_y - np.asarray(y)
    r = np.sqrt(dy * dy + rx_z * rx_z)
    mag = np.asarray(weight) * np.asarray(amp) / np.sqrt(r)
    if obliquity:
        mag = mag * (rx_z / r)
    total = np.asarray(phase) + k * r
    return complex(np.sum(mag * np.cos(total)), np.sum(mag * np.sin(total)))


def hyp1f2(a, b1, b2, x, tol, max_terms):
    """Term-recurrence series for 1F2(a; b1, b2; x), vectorized over ``x``.

    Returns ``(value, max_abs_term, n_terms)``; ``n_terms`` is -1 where the
    series did not meet ``tol`` within ``max_terms`` terms.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    s = np.ones_like(x)
    t = np.ones_like(x)
    big = np.ones_like(x)
    nterms = np.full(x.shape, -1, dtype=np.int64)
    active = np.ones(x.shape, dtype=bool)
    # terms grow while n^2 < |x|; never stop before the peak
    n_min = np.ceil(np.sqrt(np.abs(x))).astype(np.int64)
    # overflowing terms leave n_terms at -1, which the caller reports
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(max_terms):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            ratio = (a + n) * x[idx] / ((b1 + n) * (b2 + n) * (n + 1.0))
            t[idx] *= ratio
            s[idx] += t[idx]
            big[idx] = np.maximum(big[idx], np.abs(t[idx]))
            done = ((np.abs(t[idx]) <= tol * np.abs(s[idx])) & (n + 1 >= n_min[idx])) | (t[idx] == 0.0)
            nterms[idx[done]] = n + 2
            active[idx[done]] = False
    return s, big, nterms
