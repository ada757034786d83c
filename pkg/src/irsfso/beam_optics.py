"""Gaussian beam field, phase and power density in the 2-D yz-plane.

Fields use the convention E = A exp(-j psi) with the phase
psi = -k z - k y^2 / (2 R(z)) + zeta(z), i.e. a wave travelling towards +z
carries exp(+j k z). All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DomainError

if TYPE_CHECKING:
    from .irs_phase import IrsGeometry

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def default_e0(w0: float) -> float:
    """Field amplitude for unit line power at the waist: E0^2 w0 sqrt(pi/2) = 1."""
    return (2.0 / math.pi) ** 0.25 / math.sqrt(w0)


@dataclass(frozen=True)
class BeamParams:
    """Transmit Gaussian beam. ``e0=None`` selects unit-power normalization."""

    w0: float
    wavelength: float
    e0: float | None = None

    def __post_init__(self):
        if not self.w0 > 0:
            raise DomainError("beam waist w0 must be positive")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        if self.e0 is None:
            object.__setattr__(self, "e0", default_e0(self.w0))

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def z0(self) -> float:
        """Rayleigh range."""
        return math.pi * self.w0 ** 2 / self.wavelength

    def with_waist(self, w0: float) -> "BeamParams":
        """Same wavelength and normalization convention, different waist."""
        return BeamParams(w0=w0, wavelength=self.wavelength)


@dataclass(frozen=True)
class FieldSample:
    amplitude: float
    phase: float

    def wrapped(self) -> "FieldSample":
        return FieldSample(self.amplitude, wrap_phase(self.phase))

    @property
    def complex(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), -math.sin(self.phase))


def beam_width(z, beam: BeamParams):
    z = np.asarray(z, dtype=float)
    return beam.w0 * np.sqrt(1.0 + (z / beam.z0) ** 2)


def inverse_curvature(z, beam: BeamParams):
    """1/R(z) = z / (z^2 + z0^2); zero at the waist."""
    z = np.asarray(z, dtype=float)
    return z / (z * z + beam.z0 ** 2)


def gouy_phase(z, beam: BeamParams):
    return np.arctan(np.asarray(z, dtype=float) / beam.z0)


def phase(y_hat, z_hat, beam: BeamParams):
    """Unwrapped phase psi(y, z) of the beam."""
    y_hat = np.asarray(y_hat, dtype=float)
    z_hat = np.asarray(z_hat, dtype=float)
    k = beam.k
    return -k * z_hat - 0.5 * k * y_hat ** 2 * inverse_curvature(z_hat, beam) + gouy_phase(z_hat, beam)


def amplitude(y_hat, z_hat, beam: BeamParams):
    w = beam_width(z_hat, beam)
    return beam.e0 * np.sqrt(beam.w0 / w) * np.exp(-(np.asarray(y_hat, dtype=float) / w) ** 2)


def wrap_phase(psi):
    """Reduce phase to (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(psi, dtype=float), 2.0 * np.pi)
    return float(w) if np.ndim(w) == 0 else w


def field(y_hat, z_hat, beam: BeamParams, unwrapped=False):
    """Field sample at a point, or ``(amplitude, phase)`` arrays.

    The phase is wrapped to (-pi, pi] unless ``unwrapped`` is set.
    """
    amp = amplitude(y_hat, z_hat, beam)
    psi = phase(y_hat, z_hat, beam)
    if not unwrapped:
        psi = wrap_phase(psi)
    if np.ndim(amp) == 0:
        return FieldSample(float(amp), float(psi))
    return amp, psi


def complex_field(y_hat, z_hat, beam: BeamParams):
    return amplitude(y_hat, z_hat, beam) * np.exp(-1j * phase(y_hat, z_hat, beam))


def power_density(y_hat, z_hat, beam: BeamParams):
    """Unit-power Gaussian line density sqrt(2/pi)/w * exp(-2 y^2 / w^2)."""
    w = beam_width(z_hat, beam)
    return SQRT_2_OVER_PI / w * np.exp(-2.0 * (np.asarray(y_hat, dtype=float) / w) ** 2)


def printed_power_density(y_hat, z_hat, beam: BeamParams):
    """Density with the 2/(sqrt(pi) w) prefactor; integrates to sqrt(2), kept for reference."""
    w = beam_width(z_hat, beam)
    return 2.0 / (math.sqrt(math.pi) * w) * np.exp(-2.0 * (np.asarray(y_hat, dtype=float) / w) ** 2)


def irs_power_density(y, geometry: "IrsGeometry", beam: BeamParams):
    """Projected power density across the tilted IRS (far-field approximation).

    Warns when ``d_t2r < 100 a_r sin(theta_i)``, where the approximation
    ``d_t2r >> y sin(theta_i)`` is no longer comfortable.
    """
    ct = math.cos(geometry.theta_i)
    st = math.sin(geometry.theta_i)
    if math.isfinite(geometry.a_r) and geometry.d_t2r < 100.0 * geometry.a_r * st:
        warnings.warn("IRS density approximation degrades: d_t2r < 100 a_r sin(theta_i)",
                      RuntimeWarning, stacklevel=2)
    w = float(beam_width(geometry.d_t2r, beam))
    y = np.asarray(y, dtype=float)
    return SQRT_2_OVER_PI * ct / w * np.exp(-2.0 * (ct * y / w) ** 2)


def incident_irs_field(y, geometry: "IrsGeometry", beam: BeamParams):
    """Exact incident (amplitude, phase) at IRS coordinate ``y``."""
    y = np.asarray(y, dtype=float)
    y_hat = y * math.cos(geometry.theta_i)
    z_hat = geometry.d_t2r + y * math.sin(geometry.theta_i)
    return amplitude(y_hat, z_hat, beam), phase(y_hat, z_hat, beam)
