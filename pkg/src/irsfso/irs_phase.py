"""Virtual-beam waist solvers and the IRS phase-shift profile for beam focusing.

The reflected beam is shaped by imposing, across the IRS, the phase of a
virtual Gaussian beam that converges towards a waist located ``d_r2l + d_f``
from the IRS along the reflection direction (``d_f = 0`` focuses on the
receiver itself).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import beam_optics as bo
from .beam_optics import BeamParams
from .errors import ConvergenceError, DomainError, InfeasibleFocusError, RegimeError


@dataclass(frozen=True)
class IrsGeometry:
    """Tx -> IRS -> Rx geometry. Angles in radians, lengths in metres.

    ``a_r`` is the IRS half-length (``math.inf`` for an unbounded surface);
    ``d_f`` is the focal offset beyond the receiver (``None`` means 0).
    """

    theta_i: float
    theta_r: float
    d_t2r: float
    d_r2l: float
    a_r: float = math.inf
    d_f: float | None = None

    def __post_init__(self):
        for name in ("theta_i", "theta_r"):
            v = getattr(self, name)
            if not (0.0 <= v < math.pi / 2):
                raise DomainError(f"{name} must lie in [0, pi/2)")
        for name in ("d_t2r", "d_r2l", "a_r"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.d_f is not None and not self.d_f >= 0:
            raise DomainError("d_f must be non-negative")

    @property
    def focal_offset(self) -> float:
        return 0.0 if self.d_f is None else float(self.d_f)

    @property
    def virtual_distance(self) -> float:
        """Distance from the IRS centre to the virtual-beam waist."""
        return self.d_r2l + self.focal_offset


def equivalent_widths(geometry: IrsGeometry, beam: BeamParams):
    """Spot width on the IRS and its projection onto the reflection direction."""
    w_irs = float(bo.beam_width(geometry.d_t2r, beam)) / math.cos(geometry.theta_i)
    return w_irs, w_irs * math.cos(geometry.theta_r)


def waist_for_width(width: float, distance: float, wavelength: float) -> float:
    """Smaller waist w0 with w(distance, w0) = width.

    Algebraically the minus-branch root of w0^4 - width^2 w0^2 + (d lam/pi)^2,
    evaluated in the cancellation-free form (d lam/pi)^2 / (width^2/2 + sqrt(disc)/(2 pi)).
    """
    disc = math.pi ** 2 * width ** 4 - 4.0 * distance ** 2 * wavelength ** 2
    if disc < 0:
        raise InfeasibleFocusError(
            f"cannot reach width {width:.4g} m at {distance:.4g} m: distance exceeds "
            f"the diffraction-limited reach {math.pi * width ** 2 / (2 * wavelength):.4g} m")
    c = distance * wavelength / math.pi
    denom = 0.5 * width ** 2 + math.sqrt(disc) / (2.0 * math.pi)
    if denom == 0.0:
        return 0.0
    return math.sqrt(c * c / denom)


def virtual_waist_exact(geometry: IrsGeometry, beam: BeamParams) -> float:
    """Virtual waist focusing the reflected beam at the receiver (d_f = 0)."""
    _, w_eq = equivalent_widths(geometry, beam)
    return waist_for_width(w_eq, geometry.d_r2l, beam.wavelength)


def virtual_waist_for_target_width(geometry: IrsGeometry, beam: BeamParams, w_l: float):
    """Partial convergence: waist and focal offset giving width ``w_l`` at the Rx.

    Uses the far-field approximation w0 ~ lam d_r2l / (pi (w_eq - w_l)) and
    solves w(d_f, w0) = w_l for ``d_f`` by bracketing on [0, 10 d_r2l].
    """
    _, w_eq = equivalent_widths(geometry, beam)
    w_min = virtual_waist_exact(geometry, beam)
    if not (w_min <= w_l < w_eq):
        raise RegimeError(f"w_l={w_l:.4g} outside the partial-convergence range [{w_min:.4g}, {w_eq:.4g})")
    lam = beam.wavelength
    w_t = lam * geometry.d_r2l / (math.pi * (w_eq - w_l))
    if w_t >= w_l:
        raise RegimeError(f"approximate waist {w_t:.4g} m is not smaller than w_l={w_l:.4g} m")
    z_r = math.pi * w_t ** 2 / lam
    if geometry.d_r2l < 10.0 * z_r:
        warnings.warn(f"d_r2l={geometry.d_r2l:.4g} m < 10 z_R={10 * z_r:.4g} m: waist approximation degrades",
                      RuntimeWarning, stacklevel=2)
    vbeam = BeamParams(w0=w_t, wavelength=lam)
    hi = 10.0 * geometry.d_r2l
    f = lambda d: float(bo.beam_width(d, vbeam)) - w_l  # noqa: E731
    if f(hi) < 0:
        raise RegimeError(f"no focal offset within {hi:.4g} m reaches w_l={w_l:.4g} m")
    d_f = brentq(f, 0.0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500)
    return w_t, d_f


def width_derivatives(z, w0, wavelength):
    """w(z, w0) and its partial derivatives with respect to z and w0."""
    q = z * wavelength / (math.pi * w0 ** 2)
    root = math.sqrt(1.0 + q * q)
    w = w0 * root
    dw_dz = w0 * q / root * wavelength / (math.pi * w0 ** 2)
    dw_dw0 = (1.0 - q * q) / root
    return w, dw_dz, dw_dw0


def solve_focus_system(geometry: IrsGeometry, beam: BeamParams, w_l: float,
                       initial=None, tol=1e-13, max_iter=200):
    """Solve both width constraints of the partial-focus design exactly.

    Unknowns (w0, d_f): w(d_r2l + d_f, w0) = w_eq and w(d_f, w0) = w_l.
    Damped Newton iteration on relative residuals, started from the
    far-field approximation unless ``initial`` is given.
    """
    _, w_eq = equivalent_widths(geometry, beam)
    lam = beam.wavelength
    w0, d_f = initial if initial is not None else virtual_waist_for_target_width(geometry, beam, w_l)

    def residual(w0, d_f):
        a, a_z, a_w = width_derivatives(geometry.d_r2l + d_f, w0, lam)
        b, b_z, b_w = width_derivatives(d_f, w0, lam)
        r = np.array([a / w_eq - 1.0, b / w_l - 1.0])
        jac = np.array([[a_w / w_eq, a_z / w_eq], [b_w / w_l, b_z / w_l]])
        return r, jac

    r, jac = residual(w0, d_f)
    for _ in range(max_iter):
        norm = float(np.max(np.abs(r)))
        if norm < tol:
            return w0, d_f
        step = np.linalg.solve(jac, -r)
        t = 1.0
        while t > 1e-10:
            w_new = w0 + t * step[0]
            d_new = d_f + t * step[1]
            if w_new > 0 and d_new >= 0:
                r_new, jac_new = residual(w_new, d_new)
                if float(np.max(np.abs(r_new))) < norm:
                    break
            t *= 0.5
        else:
            raise ConvergenceError("focus-system Newton iteration stalled")
        w0, d_f, r, jac = w_new, d_new, r_new, jac_new
    raise ConvergenceError("focus-system Newton iteration did not converge")


@dataclass(frozen=True)
class PhaseProfile:
    """Phase shift applied across the IRS, a pure function of ``y``."""

    geometry: IrsGeometry
    beam: BeamParams
    w_tilde0: float

    @property
    def valid_range(self):
        return (-self.geometry.a_r, self.geometry.a_r)

    @property
    def virtual_beam(self) -> BeamParams:
        return self.beam.with_waist(self.w_tilde0)

    def incident_phase(self, y):
        g = self.geometry
        y = np.asarray(y, dtype=float)
        return bo.phase(y * math.cos(g.theta_i), g.d_t2r + y * math.sin(g.theta_i), self.beam)

    def virtual_phase(self, y):
        """Phase of the virtual beam, travelling back from its waist, at the IRS."""
        g = self.geometry
        y = np.asarray(y, dtype=float)
        return bo.phase(y * math.cos(g.theta_r), -(g.virtual_distance + y * math.sin(g.theta_r)),
                        self.virtual_beam)

    def __call__(self, y):
        dpsi = math.pi - self.incident_phase(y) + self.virtual_phase(y)
        return float(dpsi) if np.ndim(dpsi) == 0 else dpsi


def phase_shift_profile(geometry: IrsGeometry, beam: BeamParams, w_tilde0: float) -> PhaseProfile:
    if not w_tilde0 > 0:
        raise DomainError("virtual waist must be positive")
    return PhaseProfile(geometry, beam, float(w_tilde0))


@dataclass(frozen=True)
class FocusDesign:
    geometry: IrsGeometry
    w_tilde0: float
    d_f: float
    w_rx: float
    profile: PhaseProfile


def design_focus(geometry: IrsGeometry, beam: BeamParams, w_l: float | None = None) -> FocusDesign:
    """Full design: waist, focal offset and phase profile.

    ``w_l=None`` focuses on the receiver; otherwise the beam is partially
    converged to width ``w_l`` at the receiver plane.
    """
    if w_l is None:
        w_t = virtual_waist_exact(geometry, beam)
        d_f = 0.0
        w_rx = w_t
    else:
        w_t, d_f = virtual_waist_for_target_width(geometry, beam, w_l)
        w_rx = float(bo.beam_width(d_f, beam.with_waist(w_t)))
    geo = replace(geometry, d_f=d_f)
    return FocusDesign(geo, w_t, d_f, w_rx, phase_shift_profile(geo, beam, w_t))
