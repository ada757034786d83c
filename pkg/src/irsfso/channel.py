"""Turbulence fading, link budget and analytic outage probability.

The composite channel is h = h_l h_a h_p. Outage occurs when h < h0,
where h0 follows from the rate requirement. For the indicator pointing
model the outage probability has a closed form; for the continuous
models it is a single finite integral over the h_p density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special as sp
from scipy.special import gammaincinv

from .errors import ConvergenceError, DomainError, QuadratureError
from .numerics import (QuadratureSpec, erfc, gamma_sign, gauss_legendre, hyp1f2,
                       integrate_adaptive, ln_gamma)
from .pointing import (HpDistribution, PointingScenario, displacement_cdf, gaussian_model_params,
                       pdf_hp)

KINDS = ("lognormal", "gamma_gamma")
GAMMA_INTEGER_GAP = 1e-6
# cancellation error budget of the series form before switching to the mixture integral
GG_SERIES_MAX_ERROR = 1e-11
OUTAGE_SPEC = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10, max_subdivisions=4000)
OUTAGE_ACCEPT_ERROR = 1e-10


def rytov_variance(cn2: float, k: float, d_e2e: float) -> float:
    """sigma_R^2 = 1.23 Cn^2 k^(7/6) d^(11/6)."""
    if not (cn2 > 0 and k > 0 and d_e2e > 0):
        raise DomainError("Cn^2, k and distance must be positive")
    return 1.23 * cn2 * k ** (7.0 / 6.0) * d_e2e ** (11.0 / 6.0)


def gg_alpha_beta(sigma_r2: float):
    """Large- and small-scale shape parameters from the Rytov variance."""
    if not sigma_r2 > 0:
        raise DomainError("Rytov variance must be positive")
    s125 = sigma_r2 ** 1.2  # sigma_R^(12/5)
    alpha = 1.0 / math.expm1(0.49 * sigma_r2 / (1.0 + 1.11 * s125) ** (7.0 / 6.0))
    beta = 1.0 / math.expm1(0.51 * sigma_r2 / (1.0 + 0.69 * s125) ** (5.0 / 6.0))
    return alpha, beta


@dataclass(frozen=True)
class TurbulenceModel:
    """Lognormal or Gamma-Gamma fading with Rytov variance ``sigma_r2``.

    For Gamma-Gamma, ``alpha``/``beta`` default to the Rytov mapping.
    """

    kind: str
    sigma_r2: float
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown turbulence kind {self.kind!r}")
        if not self.sigma_r2 > 0:
            raise DomainError("sigma_R^2 must be positive")
        if self.kind == "gamma_gamma":
            a, b = gg_alpha_beta(self.sigma_r2)
            if self.alpha is None:
                object.__setattr__(self, "alpha", a)
            if self.beta is None:
                object.__setattr__(self, "beta", b)
            if not (self.alpha > 0 and self.beta > 0):
                raise DomainError("alpha and beta must be positive")

    @classmethod
    def from_cn2(cls, kind: str, cn2: float, wavelength: float, d_e2e: float) -> "TurbulenceModel":
        return cls(kind, rytov_variance(cn2, 2.0 * math.pi / wavelength, d_e2e))

    @property
    def sigma2(self) -> float:
        """Variance of the log amplitude."""
        return self.sigma_r2 / 4.0

    @property
    def gamma(self):
        return None if self.kind != "gamma_gamma" else self.alpha - self.beta

    def cdf(self, h_a):
        if self.kind == "lognormal":
            return lognormal_cdf(h_a, self.sigma2)
        return gg_cdf(h_a, self.alpha, self.beta)


@dataclass(frozen=True)
class LinkBudget:
    """Path loss, transmit power (W), rate (bit/use), noise variance and conversion ratio.

    Give either ``h_l`` directly or ``sigma_att`` (1/m) with ``z`` (m).
    """

    p_t: float
    r0: float = 1.0
    n0: float = 1e-12
    h_l: float | None = None
    sigma_att: float | None = None
    z: float | None = None
    eta: float = 1.0

    def __post_init__(self):
        if self.h_l is None:
            if self.sigma_att is None or self.z is None:
                raise DomainError("give h_l or both sigma_att and z")
            if not (self.sigma_att >= 0 and self.z >= 0):
                raise DomainError("sigma_att and z must be non-negative")
            object.__setattr__(self, "h_l", math.exp(-self.sigma_att * self.z))
        elif self.sigma_att is not None or self.z is not None:
            raise DomainError("h_l conflicts with sigma_att/z; give one form")
        if not 0 < self.h_l <= 1:
            raise DomainError("h_l must lie in (0, 1]")
        for name in ("p_t", "r0", "n0", "eta"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    def with_power(self, p_t: float) -> "LinkBudget":
        return LinkBudget(p_t=p_t, r0=self.r0, n0=self.n0, h_l=self.h_l, eta=self.eta)


def dbm_to_watt(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0) / 1000.0


def watt_to_dbm(p_w):
    p_w = np.asarray(p_w, dtype=float)
    if np.any(p_w <= 0):
        raise DomainError("power must be positive")
    return 10.0 * np.log10(p_w * 1000.0)


def outage_threshold(budget: LinkBudget) -> float:
    """h0 = sqrt((2^R0 - 1) N0) / (sqrt(2) eta P_t R0)."""
    return math.sqrt(math.expm1(budget.r0 * math.log(2.0)) * budget.n0) / (
        math.sqrt(2.0) * budget.eta * budget.p_t * budget.r0)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def lognormal_cdf(h_a, sigma2: float):
    """P(h <= h_a) for log h ~ Normal(0, 4 sigma2)."""
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    h = np.asarray(h_a, dtype=float)
    if np.any(h <= 0):
        raise DomainError("h_a must be positive")
    return _out(0.5 * erfc(-np.log(h) / math.sqrt(8.0 * sigma2)))


def gg_pdf(h_a, alpha: float, beta: float):
    """Gamma-Gamma density 2 (ab)^((a+b)/2) h^((a+b)/2-1) K_(a-b)(2 sqrt(ab h)) / (G(a) G(b))."""
    h = np.asarray(h_a, dtype=float)
    out = np.zeros_like(h)
    pos = h > 0
    hp = h[pos]
    z = 2.0 * np.sqrt(alpha * beta * hp)
    logv = (math.log(2.0) + 0.5 * (alpha + beta) * math.log(alpha * beta)
            + (0.5 * (alpha + beta) - 1.0) * np.log(hp)
            + np.log(sp.kve(alpha - beta, z)) - z - sp.gammaln(alpha) - sp.gammaln(beta))
    out[pos] = np.exp(logv)
    return _out(out)


def _gg_series(h, alpha, beta):
    """Series form; returns (value, estimated absolute rounding error)."""
    g = alpha - beta
    x = alpha * beta * h
    logx = np.log(x)
    csc = 1.0 / math.sin(math.pi * g)
    s1, m1 = hyp1f2(beta, 1.0 - g, 1.0 + beta, x, return_scale=True)
    s2, m2 = hyp1f2(alpha, 1.0 + g, 1.0 + alpha, x, return_scale=True)
    c1 = beta * logx - ln_gamma(alpha) - ln_gamma(1.0 - g) - ln_gamma(beta + 1.0)
    c2 = alpha * logx - ln_gamma(beta) - ln_gamma(1.0 + g) - ln_gamma(alpha + 1.0)
    sg1 = gamma_sign(1.0 - g)
    eps = np.finfo(float).eps
    # overflow here only marks points that the mixture integral takes over
    with np.errstate(over="ignore", invalid="ignore"):
        p1 = np.exp(c1)
        p2 = np.exp(c2)
        val = math.pi * csc * (sg1 * p1 * s1 - p2 * s2)
        err = math.pi * abs(csc) * eps * (p1 * (np.abs(s1) + 50.0 * m1) + p2 * (np.abs(s2) + 50.0 * m2))
    return val, err


def _gg_mixture(h, alpha, beta, n_panels=48, order=16):
    """P(XY <= h) with X ~ Gamma(a, 1/a), Y ~ Gamma(b, 1/b), integrating over the larger shape."""
    outer, inner = (alpha, beta) if alpha >= beta else (beta, alpha)
    lo = gammaincinv(outer, 1e-17) / outer
    hi = gammaincinv(outer, 1.0 - 1e-16) / outer
    edges = np.linspace(math.log(lo), math.log(hi), n_panels + 1)
    xg, wg = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    t = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * xg[None, :]
    wt = (half[:, None] * wg[None, :]).ravel()
    t = t.ravel()
    x = np.exp(t)
    # density of X in the log variable: x f_X(x)
    logf = outer * math.log(outer) + outer * t - outer * x - sp.gammaln(outer)
    fw = wt * np.exp(logf)
    h = np.atleast_1d(h)
    out = np.empty(h.shape)
    # blocks bound the (points x nodes) work array
    for i in range(0, h.size, 4096):
        blk = h[i:i + 4096]
        out[i:i + 4096] = sp.gammainc(inner, inner * blk[:, None] / x[None, :]) @ fw
    return out


def gg_cdf(h_a, alpha: float, beta: float, diagnostics: bool = False):
    """Gamma-Gamma CDF from the closed form in 1F2 functions.

    When gamma = alpha - beta is within 1e-6 of an integer, beta is nudged
    by 1e-6 (1 + |beta|) and a warning is issued. Where the two series
    terms cancel beyond double precision the value is taken from the
    equivalent Gamma-mixture integral instead. The result is clamped to
    [0, 1]. With ``diagnostics`` a dict describing the path is returned too.
    """
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    h = np.asarray(h_a, dtype=float)
    if np.any(h <= 0):
        raise DomainError("h_a must be positive")
    info = {"beta_used": beta, "perturbed": False, "mixture_points": 0}
    g = alpha - beta
    if abs(g - round(g)) < GAMMA_INTEGER_GAP:
        new_beta = beta + 1e-6 * (1.0 + abs(beta))
        warnings.warn(f"alpha - beta = {g:.9g} is near an integer; beta perturbed to {new_beta:.12g}",
                      RuntimeWarning, stacklevel=2)
        beta = new_beta
        info.update(beta_used=beta, perturbed=True)
    flat = np.atleast_1d(h).ravel()
    try:
        val, err = _gg_series(flat, alpha, beta)
    except ConvergenceError:
        val = np.full(flat.shape, np.nan)
        err = np.full(flat.shape, np.inf)
    bad = ~(np.isfinite(val) & (err <= GG_SERIES_MAX_ERROR))
    if bad.any():
        val = np.array(val, dtype=float)
        val[bad] = _gg_mixture(flat[bad], alpha, beta)
        info["mixture_points"] = int(bad.sum())
    val = np.clip(val, 0.0, 1.0).reshape(h.shape)
    val = _out(val)
    return (val, info) if diagnostics else val


def _continuous_outage(dist: HpDistribution, pointing: PointingScenario, h0, h_l, fa):
    """Integral of f_hp(h) F_a(h0 / (h h_l)) over (0, support_max)."""
    s = pointing.sigma_u
    # beyond the Rayleigh survival level exp(-80) the remaining mass is taken as certain outage
    u_tail = s * math.sqrt(160.0)
    h_min = float(dist.inverse(u_tail))
    tail = float(dist.cdf(h_min))
    bps = {float(dist.inverse(s * q)) for q in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0)}
    knee = h0 / h_l
    for f in (0.3, 1.0, 3.0):
        bps.add(knee * f)
    bps = [b for b in sorted(bps) if h_min < b < dist.support_max]

    def integrand(h):
        h = np.asarray(h, dtype=float)
        return dist.pdf(h) * fa(h0 / (h * h_l))

    try:
        body = integrate_adaptive(integrand, h_min, dist.support_max, OUTAGE_SPEC, bps)
    except QuadratureError as exc:
        # the fading CDF switches evaluation paths pointwise, leaving ~1e-13 jitter
        if not exc.error <= OUTAGE_ACCEPT_ERROR:
            raise
        body = exc.estimate
    return body + tail


def outage_from_distribution(budget: LinkBudget, turbulence: TurbulenceModel,
                             dist: HpDistribution, pointing: PointingScenario) -> float:
    """Generic outage integral: continuous part plus sifted point masses."""
    h0 = outage_threshold(budget)
    fa = turbulence.cdf
    total = 0.0
    for loc, p in dist.point_masses:
        total += p * (1.0 if loc <= 0 else float(fa(h0 / (loc * budget.h_l))))
    if dist.pdf is not None:
        total += _continuous_outage(dist, pointing, h0, budget.h_l, fa)
    return min(1.0, max(0.0, total))


def outage_indicator_closed_form(budget: LinkBudget, turbulence: TurbulenceModel,
                                 pointing: PointingScenario) -> float:
    """F_u(a_l) (F_a(h0 / h_l) - 1) + 1.

    Rearranged as F_u F_a + (1 - F_u) with the Rayleigh survival taken
    directly, which keeps relative precision when the outage is small.
    """
    f_u = displacement_cdf(pointing.a_l, pointing.sigma_u)
    s_u = math.exp(-pointing.a_l ** 2 / (2.0 * pointing.sigma_u ** 2))
    f_a = float(turbulence.cdf(outage_threshold(budget) / budget.h_l))
    return f_u * f_a + s_u


def outage_analytic(budget: LinkBudget, turbulence: TurbulenceModel, pointing: PointingScenario) -> float:
    """Analytic outage probability for the erf, indicator or Gaussian pointing model."""
    model = pointing.resolved_model
    if model == "exact":
        raise DomainError("no analytic outage for the exact pointing model; use Monte Carlo")
    if pointing.sigma_u == 0:
        hp0 = {"indicator": 1.0, "erf_approx": pointing.a0}.get(model)
        if hp0 is None:
            hp0 = gaussian_model_params(pointing)[0]
        return float(turbulence.cdf(outage_threshold(budget) / (budget.h_l * hp0)))
    if model == "indicator":
        return outage_indicator_closed_form(budget, turbulence, pointing)
    return outage_from_distribution(budget, turbulence, pdf_hp(pointing), pointing)


def outage_lower_bound(pointing: PointingScenario) -> float:
    """High-power limit 1 - F_u(a_l) of the indicator-model outage."""
    if pointing.resolved_model != "indicator":
        raise DomainError("the outage floor is defined for the indicator model")
    if pointing.sigma_u == 0:
        return 0.0
    # the survival exp(-a^2 / 2 sigma^2) directly, not 1 - F_u, to keep small floors exact
    return math.exp(-pointing.a_l ** 2 / (2.0 * pointing.sigma_u ** 2))


def outage_curve(budget: LinkBudget, turbulence: TurbulenceModel, pointing: PointingScenario, p_t_grid):
    """Analytic outage at each transmit power of ``p_t_grid`` (W)."""
    return np.array([outage_analytic(budget.with_power(float(p)), turbulence, pointing) for p in p_t_grid])
