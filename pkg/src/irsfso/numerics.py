"""Special functions, adaptive quadrature and counter-based random variates.

The error function family and the log-gamma function delegate to
``scipy.special``; the generalized hypergeometric series, the quadrature
driver and the samplers are implemented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from ._backend import kernels
from .errors import ConvergenceError, DomainError, QuadratureError

# Philox counter word 2 ("lane") separates independent uses of one seed.
LANE_POINTING = 0
LANE_FADING = 1
LANE_FADING_AUX = 2
LANE_STREAM = 3

HYP_TOL = 1e-15
HYP_MAX_TERMS = 10_000


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


class RngStream:
    """Sequential view of one Philox stream.

    Identical ``(seed, stream_id)`` pairs reproduce identical sequences;
    different stream ids address disjoint counter spaces.
    """

    __slots__ = ("seed", "stream_id", "_block")

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not (0 <= seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not (0 <= stream_id < 2**64):
            raise DomainError("stream_id must be a 64-bit unsigned integer")
        self.seed = seed
        self.stream_id = stream_id
        self._block = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, block={self._block})"

    def uniform(self, size=None):
        """Uniform variates on the open interval (0, 1)."""
        n = 1 if size is None else int(np.prod(size))
        n_blocks = -(-n // 4)
        counters = np.uint64(self._block) + np.arange(n_blocks, dtype=np.uint64)
        u = kernels.uniform_blocks(self.seed, counters, np.uint64(self.stream_id), LANE_STREAM)
        self._block += n_blocks
        u = u.ravel()[:n]
        return float(u[0]) if size is None else u.reshape(size)


def erf(x):
    return special.erf(x)


def erfc(x):
    return special.erfc(x)


def erfinv(p):
    """Inverse error function, polished with one Newton step.

    Raises DomainError for ``|p| >= 1``.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(np.abs(p_arr) >= 1.0) or np.any(~np.isfinite(p_arr)):
        raise DomainError("erfinv requires -1 < p < 1")
    x = special.erfinv(p_arr)
    deriv = 2.0 / math.sqrt(math.pi) * np.exp(-x * x)
    x = x - (special.erf(x) - p_arr) / deriv
    return float(x) if np.ndim(p) == 0 else x


def erfcinv(q):
    """Inverse complementary error function for ``0 < q < 2``."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr <= 0.0) or np.any(q_arr >= 2.0):
        raise DomainError("erfcinv requires 0 < q < 2")
    x = special.erfcinv(q_arr)
    return float(x) if np.ndim(q) == 0 else x


def _check_pole(x):
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma function has a pole at {x}")


def ln_gamma(x: float) -> float:
    """``log|Gamma(x)|``; negative non-integers go through the reflection formula."""
    x = float(x)
    _check_pole(x)
    if x > 0:
        return float(special.gammaln(x))
    # Gamma(x) Gamma(1 - x) = pi / sin(pi x)
    return math.log(math.pi) - math.log(abs(math.sin(math.pi * x))) - float(special.gammaln(1.0 - x))


def gamma_sign(x: float) -> float:
    x = float(x)
    _check_pole(x)
    if x > 0:
        return 1.0
    return 1.0 if math.floor(x) % 2 == 0 else -1.0


def hyp1f2(a, b1, b2, x, return_scale=False):
    """Generalized hypergeometric function 1F2(a; b1, b2; x).

    Summed by the term recurrence t_{n+1}/t_n = (a+n) x / ((b1+n)(b2+n)(n+1))
    until a term drops below 1e-15 of the partial sum. With
    ``return_scale=True`` also returns the largest term magnitude, which
    bounds the rounding error of the sum.
    """
    for b in (b1, b2):
        if b <= 0 and b == math.floor(b):
            raise DomainError("1F2 lower parameters cannot be non-positive integers")
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise DomainError("1F2 argument must be finite")
    val, big, nterms = kernels.hyp1f2(float(a), float(b1), float(b2), xs.ravel(),
                                      HYP_TOL, HYP_MAX_TERMS)
    if np.any(nterms < 0):
        bad = xs.ravel()[nterms < 0]
        raise ConvergenceError(f"1F2 series did not converge in {HYP_MAX_TERMS} terms (x={bad[0]!r})")
    if np.ndim(x) == 0:
        val, big = float(val[0]), float(big[0])
    else:
        val, big = val.reshape(xs.shape), big.reshape(xs.shape)
    return (val, big) if return_scale else val


# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15), ascending order.
_XK_HALF = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                     0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                     0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                     0.207784955007898467600689403773245, 0.0])
_WK_HALF = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                     0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                     0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                     0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG_HALF = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                     0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
GK_NODES = np.concatenate([-_XK_HALF[:-1], _XK_HALF[::-1]])
GK_WEIGHTS = np.concatenate([_WK_HALF[:-1], _WK_HALF[::-1]])
G_WEIGHTS = np.concatenate([_WG_HALF[:-1], _WG_HALF[::-1]])  # on GK_NODES[1::2]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    n_intervals: int


def _gk15(f, lo, hi):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = centre[:, None] + half[:, None] * GK_NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("integrand returned a non-finite value")
    kron = fx @ GK_WEIGHTS
    gauss = fx[:, 1::2] @ G_WEIGHTS
    mean = 0.5 * kron
    resasc = np.abs(fx - mean[:, None]) @ GK_WEIGHTS
    resabs = np.abs(fx) @ GK_WEIGHTS
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return kron * half, err * np.abs(half)


def integrate_adaptive_detailed(f, a, b, spec=None, breakpoints=()):
    """Globally adaptive Gauss-Kronrod (7, 15) quadrature of a vectorized ``f``.

    ``f`` receives a 1-D array of abscissae and must return values of the
    same shape. Returns a :class:`QuadratureResult`; raises
    :class:`QuadratureError` (carrying the best estimate) when the
    subdivision budget runs out before ``max(abs_tol, rel_tol*|I|)``.
    """
    spec = spec or DEFAULT_QUADRATURE
    a = float(a)
    b = float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if a > b:
        raise DomainError("integrate_adaptive requires a <= b")
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    pts = sorted({a, b, *(float(p) for p in breakpoints if a < p < b)})
    lo = np.array(pts[:-1])
    hi = np.array(pts[1:])
    val, err = _gk15(f, lo, hi)
    while True:
        total = float(np.sum(val))
        total_err = float(np.sum(err))
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if total_err <= tol:
            return QuadratureResult(total, total_err, lo.size)
        width_floor = 64.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        splittable = (hi - lo) > width_floor
        candidates = np.flatnonzero(splittable & (err > tol / lo.size))
        if candidates.size == 0:
            candidates = np.flatnonzero(splittable)[np.argmax(err[splittable])] if splittable.any() else candidates
            candidates = np.atleast_1d(candidates)
        budget = spec.max_subdivisions - lo.size
        if candidates.size == 0 or budget <= 0:
            raise QuadratureError(
                f"adaptive quadrature stopped at {lo.size} intervals with error {total_err:.3g} > {tol:.3g}",
                estimate=total, error=total_err)
        if candidates.size > budget:
            candidates = candidates[np.argsort(err[candidates])[::-1][:budget]]
        mid = 0.5 * (lo[candidates] + hi[candidates])
        new_lo = np.concatenate([lo[candidates], mid])
        new_hi = np.concatenate([mid, hi[candidates]])
        new_val, new_err = _gk15(f, new_lo, new_hi)
        keep = np.ones(lo.size, dtype=bool)
        keep[candidates] = False
        order = np.argsort(np.concatenate([lo[keep], new_lo]), kind="stable")
        lo = np.concatenate([lo[keep], new_lo])[order]
        hi = np.concatenate([hi[keep], new_hi])[order]
        val = np.concatenate([val[keep], new_val])[order]
        err = np.concatenate([err[keep], new_err])[order]


def integrate_adaptive(f, a, b, spec=None, breakpoints=()):
    """Integral of ``f`` over ``[a, b]``; see :func:`integrate_adaptive_detailed`."""
    return integrate_adaptive_detailed(f, a, b, spec, breakpoints).value


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _size_out(values, size):
    return float(values[0]) if size is None else values.reshape(size)


def sample_rayleigh(sigma_u, rng: RngStream, size=None):
    """Rayleigh variates by inversion, ``sigma_u * sqrt(-2 log U)``."""
    if not sigma_u > 0:
        raise DomainError("Rayleigh scale must be positive")
    n = 1 if size is None else int(np.prod(size))
    u = np.atleast_1d(rng.uniform(n))
    return _size_out(sigma_u * np.sqrt(-2.0 * np.log(u)), size)


def _std_normal(rng, n):
    u = np.atleast_1d(rng.uniform(2 * n)).reshape(n, 2)
    return np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


def sample_normal(mu, var, rng: RngStream, size=None):
    """Normal(mu, var) variates by the Box-Muller transform."""
    if not var >= 0:
        raise DomainError("variance must be non-negative")
    n = 1 if size is None else int(np.prod(size))
    return _size_out(mu + math.sqrt(var) * _std_normal(rng, n), size)


def sample_gamma(shape, scale, rng: RngStream, size=None):
    """Gamma(shape, scale) variates by Marsaglia-Tsang rejection."""
    if not (shape > 0 and scale > 0):
        raise DomainError("gamma shape and scale must be positive")
    n = 1 if size is None else int(np.prod(size))
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n)
    pending = np.arange(n)
    while pending.size:
        m = pending.size
        x = _std_normal(rng, m)
        u = np.atleast_1d(rng.uniform(m))
        v = 1.0 + c * x
        ok = v > 0
        v = np.where(ok, v ** 3, 1.0)
        accept = ok & ((u < 1.0 - 0.0331 * x ** 4) | (np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(v))))
        out[pending[accept]] = d * v[accept]
        pending = pending[~accept]
    if boost:
        out *= np.atleast_1d(rng.uniform(n)) ** (1.0 / shape)
    return _size_out(out * scale, size)
