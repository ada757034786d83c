"""Monte Carlo outage estimation with trial-indexed random streams.

Trial ``i`` draws its displacement and fading variates from Philox stream
``i`` (one counter lane per quantity), so the estimate does not depend on
how trials are split into chunks or across worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .channel import LinkBudget, TurbulenceModel, outage_threshold
from .errors import DomainError, QuadratureError
from .numerics import LANE_FADING, LANE_FADING_AUX, LANE_POINTING, RngStream, sample_gamma, sample_normal
from .pointing import MODELS, PointingScenario, hp, hp_exact

MIN_TRIALS = 1000
CHUNK = 65536


def default_workers() -> int:
    """Worker count from IRSFSO_WORKERS, falling back to 1."""
    raw = os.environ.get("IRSFSO_WORKERS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class McConfig:
    n_trials: int = 1_000_000
    seed: int = 0
    workers: int = 1
    model: str | None = None
    cache_threshold: int = 100_000
    cache_points: int = 4096
    chunk_size: int = CHUNK

    def __post_init__(self):
        if self.n_trials < MIN_TRIALS:
            raise DomainError(f"n_trials must be at least {MIN_TRIALS}")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.model is not None and self.model not in MODELS:
            raise DomainError(f"unknown pointing model override {self.model!r}")
        if self.chunk_size < 1 or self.cache_points < 2:
            raise DomainError("chunk_size and cache_points must be positive")


@dataclass(frozen=True)
class McEstimate:
    p_out_hat: float
    std_error: float
    n_trials: int
    failures: int

    @classmethod
    def from_count(cls, failures: int, n: int) -> "McEstimate":
        p = failures / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n, int(failures))

    @property
    def expected_failures(self) -> float:
        return self.p_out_hat * self.n_trials


def sample_ha(turbulence: TurbulenceModel, rng: RngStream, size=None):
    """Fading variates from a sequential stream.

    Lognormal: exp(N(0, 4 sigma^2)). Gamma-Gamma: product of unit-mean
    Gamma variates with shapes alpha and beta.
    """
    if turbulence.kind == "lognormal":
        return np.exp(sample_normal(0.0, 4.0 * turbulence.sigma2, rng, size))
    a, b = turbulence.alpha, turbulence.beta
    return sample_gamma(a, 1.0 / a, rng, size) * sample_gamma(b, 1.0 / b, rng, size)


def ha_trials(turbulence: TurbulenceModel, seed: int, start: int, n: int):
    """Fading variate of each trial in ``[start, start + n)``."""
    if turbulence.kind == "lognormal":
        z = kernels.normal_trials(seed, start, n, LANE_FADING)
        return np.exp(2.0 * math.sqrt(turbulence.sigma2) * z)
    a, b = turbulence.alpha, turbulence.beta
    x = kernels.gamma_trials(seed, start, n, a, 1.0 / a, LANE_FADING)
    y = kernels.gamma_trials(seed, start, n, b, 1.0 / b, LANE_FADING_AUX)
    return x * y


def u_trials(sigma_u: float, seed: int, start: int, n: int):
    """Radial displacement of each trial; identically zero without jitter."""
    if sigma_u == 0:
        return np.zeros(n)
    return kernels.rayleigh_trials(seed, start, n, sigma_u, LANE_POINTING)


class HpTable:
    """Linear interpolation table for the exact pointing loss.

    Built on ``n`` uniform points over [0, a_l + 10 w_l]; hp is taken as 0
    beyond. Construction checks every cell midpoint against the direct
    quadrature and raises if the interpolation error reaches ``max_error``.
    """

    def __init__(self, scenario: PointingScenario, n: int = 4096, max_error: float = 1e-5):
        self.u_max = scenario.a_l + 10.0 * scenario.w_l
        self.u = np.linspace(0.0, self.u_max, n)
        self.values = hp_exact(self.u, scenario)
        mids = 0.5 * (self.u[1:] + self.u[:-1])
        err = np.max(np.abs(hp_exact(mids, scenario) - self(mids)))
        self.max_interp_error = float(err)
        if err >= max_error:
            raise QuadratureError(f"hp table interpolation error {err:.3g} exceeds {max_error:.1g}")

    def __call__(self, u):
        return np.interp(np.abs(u), self.u, self.values, right=0.0)


def _hp_evaluator(pointing: PointingScenario, cfg: McConfig):
    model = cfg.model or pointing.resolved_model
    if model == "auto":
        model = pointing.resolved_model
    if model == "exact" and cfg.n_trials > cfg.cache_threshold:
        return HpTable(pointing, cfg.cache_points)
    return lambda u: hp(u, pointing, model)


def _chunks(n, size):
    return [(s, min(size, n - s)) for s in range(0, n, size)]


def _run_chunks(fn, cfg: McConfig):
    chunks = _chunks(cfg.n_trials, cfg.chunk_size)
    if cfg.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(lambda c: fn(*c), chunks))
    return [fn(*c) for c in chunks]


def channel_trials(budget: LinkBudget, turbulence: TurbulenceModel, pointing: PointingScenario,
                   cfg: McConfig, start: int, n: int, hp_fn=None):
    """Composite gain h = h_l h_a h_p for trials ``[start, start + n)``."""
    hp_fn = hp_fn or _hp_evaluator(pointing, cfg)
    u = u_trials(pointing.sigma_u, cfg.seed, start, n)
    h_a = ha_trials(turbulence, cfg.seed, start, n)
    return budget.h_l * h_a * np.asarray(hp_fn(u), dtype=float)


def simulate_outage_curve(budget: LinkBudget, turbulence: TurbulenceModel, pointing: PointingScenario,
                          cfg: McConfig, p_t_grid) -> list[McEstimate]:
    """Outage estimates at every transmit power of ``p_t_grid`` from one set of trials."""
    h0 = np.array([outage_threshold(budget.with_power(float(p))) for p in np.atleast_1d(p_t_grid)])
    hp_fn = _hp_evaluator(pointing, cfg)

    def count(start, n):
        h = channel_trials(budget, turbulence, pointing, cfg, start, n, hp_fn)
        h.sort()
        return np.searchsorted(h, h0, side="left").astype(np.int64)

    totals = np.sum(_run_chunks(count, cfg), axis=0)
    return [McEstimate.from_count(int(c), cfg.n_trials) for c in totals]


def simulate_outage(budget: LinkBudget, turbulence: TurbulenceModel, pointing: PointingScenario,
                    cfg: McConfig) -> McEstimate:
    """Fraction of trials with h_l h_a h_p(u) below the outage threshold."""
    return simulate_outage_curve(budget, turbulence, pointing, cfg, [budget.p_t])[0]


class EmpiricalCdf:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise DomainError("empirical CDF needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise DomainError("samples must be finite")
        self.x = x
        self.n = x.size

    def __call__(self, t):
        out = np.searchsorted(self.x, np.asarray(t, dtype=float), side="right") / self.n
        return float(out) if np.ndim(out) == 0 else out

    def ks_distance(self, cdf) -> float:
        """Supremum distance to a continuous CDF, evaluated at the sample jumps."""
        f = np.asarray(cdf(self.x), dtype=float)
        i = np.arange(1, self.n + 1)
        return float(max(np.max(i / self.n - f), np.max(f - (i - 1) / self.n)))


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)
