"""Pointing-error loss h_p(u) for a circular aperture and its distribution.

Models
------
exact
    Disk integral of the Gaussian spot, reduced to one quadrature.
erf_approx
    Error-function approximation for beams comparable to the aperture.
indicator
    All-or-nothing collection for beams much narrower than the aperture.
gaussian
    Conventional wide-beam form ``A0 exp(-2 u^2 / w_eq^2)``, kept as a
    reference curve.
auto
    Picks indicator, erf_approx or exact from the ratio ``w_l / a_l``.

The displacement ``u`` is the radial offset of the beam centre; with
independent Gaussian jitter on both axes it is Rayleigh distributed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, RegimeError
from .numerics import QuadratureSpec, erf, erfcinv, erfinv, integrate_adaptive

MODELS = ("exact", "erf_approx", "indicator", "gaussian", "auto")
DEFAULT_THRESHOLDS = (0.2, 1.2)
HP_EXACT_SPEC = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-10, max_subdivisions=2000)


@dataclass(frozen=True)
class PointingScenario:
    w_l: float
    a_l: float
    sigma_u: float
    model: str = "auto"
    thresholds: tuple = DEFAULT_THRESHOLDS

    def __post_init__(self):
        if not self.w_l > 0:
            raise DomainError("w_l must be positive")
        if not self.a_l > 0:
            raise DomainError("a_l must be positive")
        if not self.sigma_u >= 0:
            raise DomainError("sigma_u must be non-negative")
        if self.model not in MODELS:
            raise DomainError(f"unknown pointing model {self.model!r}; expected one of {MODELS}")
        lo, hi = self.thresholds
        if not 0 < lo < hi:
            raise DomainError("auto thresholds must satisfy 0 < low < high")

    @property
    def ratio(self) -> float:
        return self.w_l / self.a_l

    @property
    def resolved_model(self) -> str:
        if self.model != "auto":
            return self.model
        lo, hi = self.thresholds
        if self.ratio <= lo:
            return "indicator"
        if self.ratio <= hi:
            return "erf_approx"
        return "exact"

    @property
    def erf_e(self) -> float:
        """E = erf(sqrt(pi) a_l / (sqrt(2) w_l))."""
        return float(erf(math.sqrt(math.pi) * self.a_l / (math.sqrt(2.0) * self.w_l)))

    @property
    def a0(self) -> float:
        e = self.erf_e
        return e * (e + 1.0) / 2.0


def displacement_cdf(a, sigma_u):
    """Rayleigh CDF 1 - exp(-a^2 / (2 sigma_u^2))."""
    if not sigma_u > 0:
        raise DomainError("sigma_u must be positive")
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise DomainError("displacement must be non-negative")
    out = -np.expm1(-a * a / (2.0 * sigma_u * sigma_u))
    return float(out) if out.ndim == 0 else out


def _exact_one(u, w, a):
    w2 = w * w
    pref = math.sqrt(2.0 / math.pi) / w

    def f(t):
        x = a * np.sin(t)
        s = a * np.cos(t)
        return pref * erf(math.sqrt(2.0) * s / w) * np.exp(-2.0 * (x - u) ** 2 / w2) * s

    half = 0.5 * math.pi
    bps = []
    # resolve the spot when it is narrow compared with the aperture
    for off in (-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0):
        x = u + off * w
        if -a < x < a:
            bps.append(math.asin(x / a))
    return min(1.0, max(0.0, integrate_adaptive(f, -half, half, HP_EXACT_SPEC, bps)))


def hp_exact(u, scenario: PointingScenario):
    """Fraction of a Gaussian spot of width w_l collected by a disk of radius a_l."""
    u = np.abs(np.asarray(u, dtype=float))
    out = np.array([_exact_one(float(x), scenario.w_l, scenario.a_l) for x in u.ravel()]).reshape(u.shape)
    return float(out) if out.ndim == 0 else out


def hp_erf(u, scenario: PointingScenario):
    """(E/2) (erf(sqrt(2)/w_l (sqrt(pi) a_l / 2 - |u|)) + 1)."""
    u = np.abs(np.asarray(u, dtype=float))
    e = scenario.erf_e
    c = 0.5 * math.sqrt(math.pi) * scenario.a_l
    out = 0.5 * e * (erf(math.sqrt(2.0) / scenario.w_l * (c - u)) + 1.0)
    return float(out) if out.ndim == 0 else out


def hp_indicator(u, scenario: PointingScenario):
    u = np.abs(np.asarray(u, dtype=float))
    out = np.where(u <= scenario.a_l, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def gaussian_model_params(scenario: PointingScenario):
    """(A0, w_eq) of the conventional Gaussian pointing model."""
    v = math.sqrt(math.pi) * scenario.a_l / (math.sqrt(2.0) * scenario.w_l)
    ev = float(erf(v))
    a0 = ev * ev
    w_eq2 = scenario.w_l ** 2 * math.sqrt(math.pi) * ev / (2.0 * v * math.exp(-v * v))
    return a0, math.sqrt(w_eq2)


def hp_gaussian(u, scenario: PointingScenario):
    a0, w_eq = gaussian_model_params(scenario)
    u = np.asarray(u, dtype=float)
    out = a0 * np.exp(-2.0 * u * u / (w_eq * w_eq))
    return float(out) if out.ndim == 0 else out


_HP = {"exact": hp_exact, "erf_approx": hp_erf, "indicator": hp_indicator, "gaussian": hp_gaussian}


def hp(u, scenario: PointingScenario, model: str | None = None):
    """h_p(u) under ``model`` (default: the scenario's resolved model)."""
    m = scenario.resolved_model if model is None else model
    if m == "auto":
        m = scenario.resolved_model
    try:
        return _HP[m](u, scenario)
    except KeyError:
        raise DomainError(f"unknown pointing model {m!r}") from None


@dataclass(frozen=True)
class HpDistribution:
    """Distribution of h_p: continuous density on (0, support_max) plus point masses.

    ``cdf`` is exact for the models offered here and is used by tests and
    by the outage integral breakpoints.
    """

    model: str
    support_max: float
    pdf: Callable | None
    cdf: Callable
    point_masses: list = field(default_factory=list)
    inverse: Callable | None = None

    def continuous_mass(self) -> float:
        return 1.0 - sum(p for _, p in self.point_masses)


def _u_of_h_erf(h, scenario: PointingScenario):
    """Displacement giving h_p = h under the erf model, plus v = erf^-1(2h/E - 1)."""
    e = scenario.erf_e
    h = np.asarray(h, dtype=float)
    q = np.atleast_1d(2.0 * h / e)
    if np.any(q <= 0.0) or np.any(q - 1.0 >= 1.0):
        raise DomainError("h outside the open support of the erf pointing model")
    v = np.empty_like(q)
    low = q < 1.0
    # erfinv(q - 1) = -erfcinv(q) keeps precision for small h
    v[low] = -erfcinv(q[low])
    v[~low] = erfinv(q[~low] - 1.0)
    if np.ndim(h) == 0:
        v = v[0]
    u = 0.5 * math.sqrt(math.pi) * scenario.a_l - scenario.w_l / math.sqrt(2.0) * v
    return u, v


def _erf_distribution(scenario: PointingScenario) -> HpDistribution:
    s2 = scenario.sigma_u ** 2
    e = scenario.erf_e
    a0 = scenario.a0
    w = scenario.w_l

    def pdf(h):
        h = np.asarray(h, dtype=float)
        inside = (h > 0) & (h < a0)
        hh = np.where(inside, h, 0.5 * a0)
        u, v = _u_of_h_erf(hh, scenario)
        u = np.maximum(u, 0.0)
        val = math.sqrt(math.pi / 2.0) * (w / e) * (u / s2) * np.exp(v * v - u * u / (2.0 * s2))
        out = np.where(inside, val, 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf(h):
        h = np.asarray(h, dtype=float)
        hh = np.where((h > 0) & (h < a0), h, 0.5 * a0)
        u, _ = _u_of_h_erf(hh, scenario)
        u = np.maximum(u, 0.0)
        out = np.where(h <= 0, 0.0, np.where(h >= a0, 1.0, np.exp(-u * u / (2.0 * s2))))
        return float(out) if out.ndim == 0 else out

    def inverse(u):
        return hp_erf(u, scenario)

    return HpDistribution("erf_approx", a0, pdf, cdf, [], inverse)


def _gaussian_distribution(scenario: PointingScenario) -> HpDistribution:
    a0, w_eq = gaussian_model_params(scenario)
    g2 = (w_eq / (2.0 * scenario.sigma_u)) ** 2

    def pdf(h):
        h = np.asarray(h, dtype=float)
        inside = (h > 0) & (h < a0)
        hh = np.where(inside, h, 0.5 * a0)
        out = np.where(inside, g2 / a0 * (hh / a0) ** (g2 - 1.0), 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf(h):
        h = np.asarray(h, dtype=float)
        out = np.clip(np.where(h > 0, np.maximum(h, 0.0) / a0, 0.0), 0.0, 1.0) ** g2
        return float(out) if out.ndim == 0 else out

    return HpDistribution("gaussian", a0, pdf, cdf, [], lambda u: hp_gaussian(u, scenario))


def _indicator_distribution(scenario: PointingScenario) -> HpDistribution:
    f = displacement_cdf(scenario.a_l, scenario.sigma_u)
    miss = math.exp(-scenario.a_l ** 2 / (2.0 * scenario.sigma_u ** 2))

    def cdf(h):
        h = np.asarray(h, dtype=float)
        out = np.where(h < 0, 0.0, np.where(h < 1.0, miss, 1.0))
        return float(out) if out.ndim == 0 else out

    return HpDistribution("indicator", 1.0, None, cdf, [(1.0, f), (0.0, miss)],
                          lambda u: hp_indicator(u, scenario))


def pdf_hp(scenario: PointingScenario) -> HpDistribution:
    """Distribution of h_p(u) with u ~ Rayleigh(sigma_u)."""
    if not scenario.sigma_u > 0:
        raise DomainError("sigma_u = 0 collapses h_p to a point mass; no density exists")
    m = scenario.resolved_model
    if m == "erf_approx":
        return _erf_distribution(scenario)
    if m == "indicator":
        return _indicator_distribution(scenario)
    if m == "gaussian":
        return _gaussian_distribution(scenario)
    raise RegimeError("the exact pointing model has no analytic distribution; use Monte Carlo")


def pdf_hp_printed(h, scenario: PointingScenario):
    """Alternative printed density form for the erf model, kept for comparison only.

    sqrt(pi/2) w_l lam(h) exp(v^2 - lam^2 / (2 sigma^2)) with
    lam = (pi/2) a_l - w_l v / sqrt(2) and v = erf^-1(2h/E - 1). It is
    not normalized and is not used by any downstream computation.
    """
    _, v = _u_of_h_erf(h, scenario)
    lam = 0.5 * math.pi * scenario.a_l - scenario.w_l / math.sqrt(2.0) * v
    s2 = scenario.sigma_u ** 2
    out = math.sqrt(math.pi / 2.0) * scenario.w_l * lam * np.exp(v * v - lam * lam / (2.0 * s2))
    return float(out) if np.ndim(out) == 0 else out
