"""Huygens-Fresnel propagation from the IRS to the receiver plane.

Each IRS point radiates a 2-D cylindrical wavelet exp(jkr)/sqrt(r). The
superposition is evaluated with composite Gauss-Legendre panels whose width
is chosen so the total phase advances by at most ``phase_step`` per panel.
The geometric-optics reference is the virtual Gaussian beam observed a
distance ``d_f`` before its waist.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import beam_optics as bo
from ._backend import kernels
from .beam_optics import BeamParams, FieldSample
from .errors import DomainError, QuadratureError
from .irs_phase import IrsGeometry, PhaseProfile
from .numerics import erf, gauss_legendre

METHODS = ("huygens_fresnel", "geometric_optics")


@dataclass(frozen=True)
class HfOptions:
    phase_step: float = math.pi / 8
    n_pilot: int = 1024
    gl_order: int = 6
    max_nodes: int = 4_000_000
    truncation: float = 1e-6
    obliquity: bool = True


DEFAULT_HF = HfOptions()


@dataclass(frozen=True)
class RxProfile:
    y: np.ndarray
    density: np.ndarray
    method: str

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if y.ndim != 1 or y.shape != d.shape:
            raise DomainError("profile grid and density must be 1-D and of equal length")
        if y.size > 1 and not np.all(np.diff(y) > 0):
            raise DomainError("profile grid must be strictly increasing")
        if np.any(d < 0):
            raise DomainError("density must be non-negative")
        if self.method not in METHODS:
            raise DomainError(f"unknown profile method {self.method!r}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "density", d)

    def power(self) -> float:
        """Trapezoidal integral of the density over the grid."""
        return float(np.trapezoid(self.density, self.y)) if hasattr(np, "trapezoid") \
            else float(np.trapz(self.density, self.y))

    def scaled(self, factor: float) -> "RxProfile":
        return RxProfile(self.y, self.density * factor, self.method)


def receiver_point(y_tilde: float, geometry: IrsGeometry):
    """Position of receiver-plane coordinate ``y_tilde`` in IRS coordinates.

    The receiver sits on the same side of the IRS normal as the transmitter,
    the side for which the virtual-beam path length is d_r2l + y sin(theta_r).
    """
    c = math.cos(geometry.theta_r)
    s = math.sin(geometry.theta_r)
    d = geometry.d_r2l
    return y_tilde * c - d * s, y_tilde * s + d * c


def truncation_bounds(geometry: IrsGeometry, beam: BeamParams, level: float):
    """IRS interval outside which the incident amplitude is below ``level`` of its peak."""
    def log_amp(y):
        amp, _ = bo.incident_irs_field(y, geometry, beam)
        return math.log(float(amp))

    peak = max(log_amp(0.0), log_amp(1e-9))
    target = peak + math.log(level)
    w_irs = float(bo.beam_width(geometry.d_t2r, beam)) / math.cos(geometry.theta_i)
    reach = w_irs * math.sqrt(-math.log(level)) * 4.0 + 1e-9
    f = lambda y: log_amp(y) - target  # noqa: E731
    hi = brentq(f, 0.0, reach, xtol=1e-12)
    lo = brentq(f, -reach, 0.0, xtol=1e-12)
    a = geometry.a_r
    return max(lo, -a), min(hi, a)


def _design_phase(profile: PhaseProfile, y):
    """Phase of the reflected field just after the IRS, E_refl = A exp(j * value)."""
    # incident field A exp(-j psi_inc); the design phase enters as exp(-j dpsi)
    return -profile.incident_phase(y) - profile(y)


def _nodes(y_tilde, geometry, beam, profile, opts, bounds):
    lo, hi = bounds
    k = beam.k
    rx_y, rx_z = receiver_point(y_tilde, geometry)
    edges = np.linspace(lo, hi, opts.n_pilot + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])

    def total_phase(y):
        return _design_phase(profile, y) + k * np.hypot(rx_y - y, rx_z)

    ph_e = total_phase(edges)
    ph_m = total_phase(mids)
    swing = np.abs(np.diff(ph_e))
    bend = np.abs(ph_m - 0.5 * (ph_e[:-1] + ph_e[1:]))
    n_sub = np.maximum(1, np.ceil(np.maximum(swing, 4.0 * bend) / opts.phase_step)).astype(np.int64)
    total = int(n_sub.sum()) * opts.gl_order
    if total > opts.max_nodes:
        raise QuadratureError(f"phase-resolved sampling needs {total} nodes > budget {opts.max_nodes}")
    # sub-edges of pilot interval i: edges[i] + (edges[i+1]-edges[i]) * m / n_sub[i]
    owner = np.repeat(np.arange(opts.n_pilot), n_sub)
    first = np.concatenate([[0], np.cumsum(n_sub)[:-1]])
    m = np.arange(owner.size) - first[owner]
    width = (edges[owner + 1] - edges[owner]) / n_sub[owner]
    a = edges[owner] + m * width
    x, w = gauss_legendre(opts.gl_order)
    y = (a[:, None] + 0.5 * width[:, None] * (x[None, :] + 1.0)).ravel()
    wt = (0.5 * width[:, None] * w[None, :]).ravel()
    return y, wt, rx_y, rx_z


def huygens_fresnel_complex(y_tilde: float, geometry: IrsGeometry, beam: BeamParams,
                            profile: PhaseProfile, opts: HfOptions = DEFAULT_HF) -> complex:
    """Complex receiver field in the E = A exp(j arg) representation."""
    bounds = truncation_bounds(geometry, beam, opts.truncation)
    if bounds[0] >= bounds[1]:
        return 0j
    y, wt, rx_y, rx_z = _nodes(y_tilde, geometry, beam, profile, opts, bounds)
    amp, _ = bo.incident_irs_field(y, geometry, beam)
    ph = _design_phase(profile, y)
    s = kernels.hf_sum(y, wt, amp, ph, rx_y, rx_z, beam.k, opts.obliquity)
    varsigma = math.sqrt(math.cos(geometry.theta_i) / math.cos(geometry.theta_r))
    return varsigma / (1j * math.sqrt(beam.wavelength)) * s


def huygens_fresnel_field(y_tilde: float, geometry: IrsGeometry, beam: BeamParams,
                          profile: PhaseProfile, opts: HfOptions = DEFAULT_HF) -> FieldSample:
    """Receiver field as (amplitude, wrapped phase psi) with E = A exp(-j psi)."""
    e = huygens_fresnel_complex(y_tilde, geometry, beam, profile, opts)
    return FieldSample(abs(e), bo.wrap_phase(-math.atan2(e.imag, e.real)))


def huygens_fresnel_profile(y_tilde_grid, geometry: IrsGeometry, beam: BeamParams,
                            profile: PhaseProfile, opts: HfOptions = DEFAULT_HF,
                            workers: int = 1) -> RxProfile:
    grid = np.asarray(y_tilde_grid, dtype=float)

    def one(yt):
        return abs(huygens_fresnel_complex(float(yt), geometry, beam, profile, opts)) ** 2

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            dens = list(pool.map(one, grid))
    else:
        dens = [one(yt) for yt in grid]
    return RxProfile(grid, np.array(dens), "huygens_fresnel")


def intercepted_power(geometry: IrsGeometry, beam: BeamParams) -> float:
    """Fraction of the transmitted power landing on the IRS of half-length a_r."""
    if math.isinf(geometry.a_r):
        return 1.0
    w = float(bo.beam_width(geometry.d_t2r, beam))
    return float(erf(math.sqrt(2.0) * math.cos(geometry.theta_i) * geometry.a_r / w))


def geometric_optics_profile(y_tilde_grid, geometry: IrsGeometry, beam: BeamParams,
                             w_tilde0: float) -> RxProfile:
    """Virtual-beam Gaussian at distance d_f from its waist, carrying the intercepted power."""
    grid = np.asarray(y_tilde_grid, dtype=float)
    vbeam = beam.with_waist(w_tilde0)
    dens = intercepted_power(geometry, beam) * bo.power_density(grid, geometry.focal_offset, vbeam)
    return RxProfile(grid, dens, "geometric_optics")


def compare_profiles(a: RxProfile, b: RxProfile, region: float, floor: float = 1e-12) -> float:
    """RMS relative deviation of two profiles over ``|y| <= region``.

    Deviations are taken relative to the pointwise mean of both densities,
    floored at ``floor`` times the largest density in the region. ``b`` is
    linearly resampled onto the grid of ``a`` when the grids differ.
    """
    mask = np.abs(a.y) <= region
    if not mask.any():
        raise DomainError("comparison region contains no samples")
    da = a.density[mask]
    if b.y.shape == a.y.shape and np.array_equal(b.y, a.y):
        db = b.density[mask]
    else:
        db = np.interp(a.y[mask], b.y, b.density)
    denom = 0.5 * (da + db)
    denom = np.maximum(denom, floor * max(float(np.max(da)), float(np.max(db)), np.finfo(float).tiny))
    rel = (da - db) / denom
    return float(np.sqrt(np.mean(rel * rel)))


def match_power(profile: RxProfile, reference: RxProfile) -> RxProfile:
    """Scale ``profile`` so its grid power equals that of ``reference``."""
    p = profile.power()
    if p <= 0:
        raise DomainError("cannot normalize a profile with zero power")
    return profile.scaled(reference.power() / p)
