"""Acceptance suite: one test group per criterion, at the stated tolerances.

Each check records a line through ``acceptance_report``; the terminal
summary prints one PASS/FAIL line per criterion.
"""

import math
import time

import mpmath
import numpy as np
import pytest
from scipy import integrate, optimize, stats

from irsfso import cli
from irsfso.beam_optics import BeamParams, beam_width
from irsfso.channel import (LinkBudget, TurbulenceModel, dbm_to_watt, gg_cdf, gg_pdf, outage_analytic,
                            outage_from_distribution, outage_indicator_closed_form, outage_lower_bound,
                            rytov_variance)
from irsfso.config import WEATHER, load_config
from irsfso.diffraction import compare_profiles, geometric_optics_profile, huygens_fresnel_profile, match_power
from irsfso.irs_phase import IrsGeometry, design_focus, equivalent_widths, virtual_waist_exact
from irsfso.montecarlo import McConfig, empirical_cdf, ha_trials, simulate_outage_curve, u_trials
from irsfso.numerics import hyp1f2
from irsfso.pointing import PointingScenario, hp_erf, hp_exact, hp_indicator, pdf_hp

WAVELENGTH = 1550e-9
K = 2 * math.pi / WAVELENGTH
N_MC = 1_000_000


# -- 1: Huygens-Fresnel vs geometric optics -------------------------------------------------------

def test_c1_field_profile_matches_geometric_optics(acceptance_report):
    t0 = time.perf_counter()
    table = cli.execute(load_config("preset:fig2"))
    elapsed = time.perf_counter() - t0
    rms = float(table.metadata["rms_rel_dev_within_w_rx"])
    ok = rms <= 0.05 and elapsed < 60.0
    acceptance_report(1, ok, f"rms rel dev {rms:.3g} (<= 0.05) over |y| <= w_l, {elapsed:.1f} s (< 60 s)")
    assert rms <= 0.05
    assert elapsed < 60.0


def test_c1_profile_comparison_direct(fig2_geometry, fig2_beam):
    d = design_focus(fig2_geometry, fig2_beam, 0.1)
    grid = np.linspace(-0.1, 0.1, 41)
    hf = huygens_fresnel_profile(grid, d.geometry, fig2_beam, d.profile)
    go = geometric_optics_profile(grid, d.geometry, fig2_beam, d.w_tilde0)
    assert compare_profiles(match_power(hf, go), go, d.w_rx) <= 0.05


# -- 2: pointing models vs the exact disk integral ------------------------------------------------

FIG3_CASES = [
    pytest.param(0.5, "erf_approx", 2.0, 0.03, id="erf-0.5",
                 marks=pytest.mark.xfail(strict=True, reason=(
                     "the erf approximation replaces the disk by an equal-area square and drops the lower "
                     "integration limit; at w_l/a_l = 0.5 it misses the exact loss by 0.13 near u = 0.94 a_l"))),
    pytest.param(1.0, "erf_approx", 2.0, 0.03, id="erf-1.0"),
    pytest.param(0.1, "indicator", 0.8, 0.01, id="indicator-0.1"),
]


@pytest.mark.parametrize("ratio,model,u_max,tol", FIG3_CASES)
def test_c2_pointing_models_track_exact(ratio, model, u_max, tol, acceptance_report):
    t0 = time.perf_counter()
    sc = PointingScenario(w_l=ratio * 0.1, a_l=0.1, sigma_u=0.01)
    u = np.linspace(0.0, u_max * 0.1, 401)
    approx = hp_erf(u, sc) if model == "erf_approx" else hp_indicator(u, sc)
    dev = np.abs(hp_exact(u, sc) - approx)
    worst = float(dev.max())
    elapsed = time.perf_counter() - t0
    acceptance_report(2, worst <= tol, f"{model} w/a={ratio}: max dev {worst:.3g} at u={u[dev.argmax()] / 0.1:.3g} a_l "
                                       f"(<= {tol}), {elapsed:.2f} s")
    assert worst <= tol


# -- 3, 4: analytic vs Monte Carlo on the weather presets ------------------------------------------

@pytest.fixture(scope="module")
def fig4():
    t0 = time.perf_counter()
    cfg = load_config("preset:fig4", trials=N_MC)
    table = cli.execute(cfg)
    return table, time.perf_counter() - t0


def _records(table):
    return [dict(zip(table.columns, row)) for row in table.rows]


def test_c3_monte_carlo_cross_validation(fig4, acceptance_report):
    table, elapsed = fig4
    recs = _records(table)
    assert {r["weather"] for r in recs} == {"clear", "fog"}
    assert {r["sigma_u_over_al"] for r in recs} == {0.1, 0.2, 0.4}
    assert len({r["pt_dbm"] for r in recs}) == 30
    resolvable = [r for r in recs if N_MC * min(r["pout_analytic"], 1 - r["pout_analytic"]) >= 10]
    within = [abs(r["pout_mc"] - r["pout_analytic"]) <= 3 * r["mc_stderr"] for r in resolvable]
    frac = sum(within) / len(within)
    z = max(abs(r["pout_mc"] - r["pout_analytic"]) / r["mc_stderr"] for r in resolvable)
    ok = frac >= 0.95 and elapsed < 600
    acceptance_report(3, ok, f"{sum(within)}/{len(within)} resolvable points within 3 SE ({frac:.1%} >= 95%), "
                             f"max |z| {z:.2f}, {len(recs)} points, {elapsed:.1f} s (< 600 s)")
    assert frac >= 0.95
    assert elapsed < 600


def test_c4_indicator_floor(fig4, acceptance_report):
    table, _ = fig4
    recs = [r for r in _records(table) if r["model"] == "indicator"]
    top = max(r["pt_dbm"] for r in recs)
    ok = True
    details = []
    for sigma in (0.1, 0.2, 0.4):
        floor = outage_lower_bound(PointingScenario(0.01, 0.1, sigma * 0.1, model="indicator"))
        se = math.sqrt(floor * (1 - floor) / N_MC)
        at_top = {r["weather"]: r for r in recs if r["sigma_u_over_al"] == sigma and r["pt_dbm"] == top}
        for r in at_top.values():
            ok &= abs(r["pout_analytic"] - floor) <= 3 * se
            ok &= abs(r["pout_mc"] - floor) <= 3 * se
        # one seed for both presets: the same displacements miss the aperture
        ok &= abs(at_top["clear"]["pout_analytic"] - at_top["fog"]["pout_analytic"]) <= 3 * se
        ok &= at_top["clear"]["pout_mc"] == at_top["fog"]["pout_mc"]
        details.append(f"sigma={sigma}: floor {floor:.4g}, analytic clear/fog {at_top['clear']['pout_analytic']:.4g}/"
                       f"{at_top['fog']['pout_analytic']:.4g}, mc {at_top['clear']['pout_mc']:.4g}/"
                       f"{at_top['fog']['pout_mc']:.4g}")
    acceptance_report(4, ok, f"at {top:g} dBm: " + ", ".join(details))
    assert ok


def test_c4_floor_is_the_high_power_limit(acceptance_report):
    ok = True
    for sigma in (0.1, 0.2, 0.4):
        sc = PointingScenario(0.01, 0.1, sigma * 0.1, model="indicator")
        floor = outage_lower_bound(sc)
        for w in WEATHER.values():
            turb = TurbulenceModel.from_cn2(w["kind"], w["cn2"], WAVELENGTH, 1000.0)
            b = LinkBudget(p_t=1e-3, h_l=w["h_l"])
            vals = [outage_analytic(b.with_power(float(dbm_to_watt(p))), turb, sc) for p in (60.0, 90.0)]
            ok &= all(abs(v - floor) <= 1e-12 * floor for v in vals)
            mc = simulate_outage_curve(b, turb, sc, McConfig(n_trials=N_MC, seed=31), [float(dbm_to_watt(60.0))])[0]
            ok &= abs(mc.p_out_hat - floor) <= 3 * math.sqrt(floor * (1 - floor) / N_MC)
    acceptance_report(4, ok, "analytic equals 1 - F_u(a_l) to 1e-12 relative at 60/90 dBm and MC within 3 SE, "
                             "sigma_u in {0.1, 0.2, 0.4} a_l, both presets")
    assert ok


# -- 5: Rytov variance ----------------------------------------------------------------------------

@pytest.mark.parametrize("cn2,target", [(5e-14, 1.0), (0.5e-14, 0.1)])
def test_c5_rytov_pairings(cn2, target, acceptance_report):
    s = rytov_variance(cn2, K, 1000.0)
    ok = abs(s / target - 1) <= 0.02
    acceptance_report(5, ok, f"Cn2={cn2:g}: sigma_R^2 = {s:.5g} (target {target}, 2%)")
    assert ok


# -- 6: distribution oracles ----------------------------------------------------------------------

def _ks_upper_bound(ecdf, cdf, stride=50):
    """Bound on sup |F_n - F| from F at every ``stride``-th order statistic (F monotone)."""
    x = ecdf.x
    idx = np.unique(np.concatenate([np.arange(0, x.size, stride), [x.size - 1]]))
    g = x[idx]
    fg = np.asarray(cdf(g), dtype=float)
    n = x.size
    below = np.searchsorted(x, g, side="left") / n      # F_n just below g
    at = np.searchsorted(x, g, side="right") / n        # F_n at g
    d = max(np.max(np.abs(at - fg)), np.max(np.abs(below - fg)))
    # inside (g_i, g_i+1): F_n in [at_i, below_i+1], F in [F(g_i), F(g_i+1)]
    d = max(d, np.max(below[1:] - fg[:-1]), np.max(fg[1:] - at[:-1]))
    return float(d)


@pytest.mark.parametrize("sigma_r2", [0.099548, 0.99548], ids=["fog", "clear"])
def test_c6_gg_cdf_vs_empirical(sigma_r2, acceptance_report):
    turb = TurbulenceModel("gamma_gamma", sigma_r2)
    samples = ha_trials(turb, 2024, 0, N_MC)
    d = _ks_upper_bound(empirical_cdf(samples), lambda h: gg_cdf(h, turb.alpha, turb.beta))
    acceptance_report(6, d < 0.005, f"GG sigma_R^2={sigma_r2}: KS <= {d:.2g} (< 0.005, 1e6 samples)")
    assert d < 0.005


@pytest.mark.parametrize("sigma_r2", [0.099548, 0.99548], ids=["fog", "clear"])
def test_c6_gg_cdf_vs_density_quadrature(sigma_r2, acceptance_report):
    turb = TurbulenceModel("gamma_gamma", sigma_r2)
    a, b = turb.alpha, turb.beta
    h = np.geomspace(1e-3, 6.0, 40)
    ref = np.array([integrate.quad(lambda x: gg_pdf(x, a, b), 0.0, v, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
                    for v in h])
    diff = float(np.max(np.abs(gg_cdf(h, a, b) - ref)))
    acceptance_report(6, diff < 1e-6, f"GG sigma_R^2={sigma_r2}: max |cdf - quad| {diff:.2g} (< 1e-6)")
    assert diff < 1e-6


def test_c6_erf_density_vs_histogram(acceptance_report):
    sc = PointingScenario(w_l=0.1, a_l=0.1, sigma_u=0.02, model="erf_approx")
    dist = pdf_hp(sc)
    h = hp_erf(u_trials(sc.sigma_u, 99, 0, N_MC), sc)
    n_bins = 50
    # equal-probability edges, then expected counts from the density itself
    q = np.linspace(0, 1, n_bins + 1)
    edges = np.array([0.0] + [optimize.brentq(lambda x: dist.cdf(x) - p, 1e-300, dist.support_max * (1 - 1e-15),
                                              xtol=1e-15) for p in q[1:-1]] + [dist.support_max])
    probs = np.array([integrate.quad(dist.pdf, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
                      for lo, hi in zip(edges[:-1], edges[1:])])
    observed, _ = np.histogram(h, edges)
    p = stats.chisquare(observed, probs / probs.sum() * h.size).pvalue
    acceptance_report(6, p > 1e-3, f"erf h_p pdf vs 1e6-draw histogram: chi2 p = {p:.3g} (> 0.001), pdf mass "
                                   f"{probs.sum():.10f}")
    assert abs(probs.sum() - 1.0) < 1e-8
    assert p > 1e-3


def test_c6_hyp1f2_vs_extended_precision(acceptance_report):
    mpmath.mp.dps = 50
    worst = 0.0
    for sigma_r2 in (0.099548, 0.99548):
        t = TurbulenceModel("gamma_gamma", sigma_r2)
        g = t.alpha - t.beta
        for a, b1, b2 in ((t.beta, 1 - g, 1 + t.beta), (t.alpha, 1 + g, 1 + t.alpha)):
            x = t.alpha * t.beta * np.geomspace(1e-3, 10.0, 50)
            got = hyp1f2(a, b1, b2, x)
            ref = np.array([float(mpmath.hyp1f2(a, b1, b2, v)) for v in x])
            worst = max(worst, float(np.max(np.abs(got / ref - 1))))
    acceptance_report(6, worst <= 1e-12, f"1F2 vs 50-digit series on 50-point grids: max rel err {worst:.2g} "
                                         f"(<= 1e-12)")
    assert worst <= 1e-12


# -- 7: structural identities ---------------------------------------------------------------------

def test_c7_virtual_waist_self_consistency(acceptance_report):
    rng = np.random.default_rng(7)
    worst = 0.0
    count = 0
    while count < 100:
        beam = BeamParams(w0=rng.uniform(0.3e-3, 5e-3), wavelength=rng.uniform(0.8e-6, 1.7e-6))
        g = IrsGeometry(rng.uniform(0, 1.45), rng.uniform(0, 1.45), rng.uniform(5.0, 3000.0), rng.uniform(5.0, 3000))
        _, w_eq = equivalent_widths(g, beam)
        if math.pi * w_eq ** 2 <= 2.0 * g.d_r2l * beam.wavelength:
            continue
        w_t = virtual_waist_exact(g, beam)
        worst = max(worst, abs(float(beam_width(g.d_r2l, beam.with_waist(w_t))) / w_eq - 1))
        count += 1
    acceptance_report(7, worst <= 1e-9, f"w(d_r2l, w~0) = w_eq on 100 random geometries: max rel err {worst:.2g}")
    assert worst <= 1e-9


def test_c7_closed_form_equals_sifted_pipeline(acceptance_report):
    worst = 0.0
    for name, w in WEATHER.items():
        turb = TurbulenceModel.from_cn2(w["kind"], w["cn2"], WAVELENGTH, 1000.0)
        for sigma in (0.1, 0.2, 0.4):
            sc = PointingScenario(0.01, 0.1, sigma * 0.1, model="indicator")
            dist = pdf_hp(sc)
            for p in dbm_to_watt(np.linspace(-50, 10, 30)):
                b = LinkBudget(p_t=float(p), h_l=w["h_l"])
                worst = max(worst, abs(outage_indicator_closed_form(b, turb, sc)
                                       - outage_from_distribution(b, turb, dist, sc)))
    acceptance_report(7, worst <= 1e-12, f"indicator closed form vs impulse-sifted pipeline: max diff {worst:.2g}")
    assert worst <= 1e-12


def test_c7_monte_carlo_bit_exact_across_workers(acceptance_report):
    powers = dbm_to_watt(np.linspace(-50, 10, 30))
    ok = True
    for name, w in WEATHER.items():
        turb = TurbulenceModel.from_cn2(w["kind"], w["cn2"], WAVELENGTH, 1000.0)
        b = LinkBudget(p_t=1e-3, h_l=w["h_l"])
        sc = PointingScenario(0.1, 0.1, 0.02, model="erf_approx")
        runs = [simulate_outage_curve(b, turb, sc, McConfig(n_trials=300_000, seed=5, workers=k), powers)
                for k in (1, 2, 4)]
        ok &= all([e.failures for e in r] == [e.failures for e in runs[0]] for r in runs)
        ok &= all([e.p_out_hat for e in r] == [e.p_out_hat for e in runs[0]] for r in runs)
    acceptance_report(7, ok, "MC estimates bit-identical for 1, 2 and 4 workers (both presets)")
    assert ok


# -- 8: too-focused beams lose under strong jitter ------------------------------------------------

FIG5_MODELS = {0.1: "indicator", 1.0: "erf_approx", 2.0: "gaussian"}


def _required_dbm(turb, h_l, sc, target=1e-3):
    f = lambda p: math.log(outage_analytic(LinkBudget(p_t=float(dbm_to_watt(p)), h_l=h_l), turb, sc)) \
        - math.log(target)  # noqa: E731
    return optimize.brentq(f, -60.0, 30.0, xtol=1e-9)


@pytest.mark.parametrize("weather", ["clear", "fog"])
def test_c8_design_insight(weather, acceptance_report):
    w = WEATHER[weather]
    turb = TurbulenceModel.from_cn2(w["kind"], w["cn2"], WAVELENGTH, 1000.0)
    sc = {r: PointingScenario(r * 0.1, 0.1, 0.01, model=m) for r, m in FIG5_MODELS.items()}
    gain = _required_dbm(turb, w["h_l"], sc[1.0]) - _required_dbm(turb, w["h_l"], sc[0.1])
    ok_gain = gain < 1.0

    powers = np.linspace(-50, 10, 31)
    curves = {}
    for r, m in FIG5_MODELS.items():
        s = PointingScenario(r * 0.1, 0.1, 0.04, model=m)
        curves[r] = np.array([outage_analytic(LinkBudget(p_t=float(dbm_to_watt(p)), h_l=w["h_l"]), turb, s)
                              for p in powers])
    floor = outage_lower_bound(PointingScenario(0.01, 0.1, 0.04, model="indicator"))
    hit = {r: powers[np.argmax(c <= 1.01 * c[-1])] for r, c in curves.items()}
    earliest = hit[0.1] < min(hit[1.0], hit[2.0]) and curves[0.1][-1] == pytest.approx(floor, rel=1e-9)
    informative = np.all(np.vstack(list(curves.values())) < 0.99, axis=0)
    worse = informative & (curves[0.1] > curves[1.0]) & (curves[0.1] > curves[2.0])
    frac = worse.sum() / informative.sum()
    ok = ok_gain and earliest and frac > 0.5
    acceptance_report(8, ok, f"{weather}: gain of w/a=0.1 over 1.0 at P_out=1e-3 is {gain:.2f} dB (< 1 dB); "
                             f"floor {floor:.4g} reached at {hit[0.1]:g} dBm vs {hit[1.0]:g}/{hit[2.0]:g}; "
                             f"0.1 curve worst at {worse.sum()}/{informative.sum()} informative points")
    assert ok_gain
    assert earliest
    assert frac > 0.5
