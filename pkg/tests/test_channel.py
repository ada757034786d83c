import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from irsfso.channel import (LinkBudget, TurbulenceModel, dbm_to_watt, gg_alpha_beta, gg_cdf, gg_pdf,
                            lognormal_cdf, outage_analytic, outage_curve, outage_from_distribution,
                            outage_indicator_closed_form, outage_lower_bound, outage_threshold, rytov_variance,
                            watt_to_dbm)
from irsfso.errors import DomainError
from irsfso.pointing import PointingScenario, displacement_cdf, hp_erf, pdf_hp

CLEAR = TurbulenceModel("lognormal", 0.99548)
FOG = TurbulenceModel("gamma_gamma", 0.099548)


def _gg_quad_oracle(h, a, b):
    val, _ = integrate.quad(lambda x: gg_pdf(x, a, b), 0.0, h, limit=400, epsabs=1e-14, epsrel=1e-12)
    return val


def test_rytov_formula():
    k = 2 * math.pi / 1550e-9
    assert rytov_variance(5e-14, k, 1000.0) == pytest.approx(1.23 * 5e-14 * k ** (7 / 6) * 1000.0 ** (11 / 6))
    with pytest.raises(DomainError):
        rytov_variance(0.0, k, 1000.0)


def test_gg_shapes_reference_values():
    a, b = gg_alpha_beta(1.0)
    assert a == pytest.approx(4.39, abs=0.005)
    assert b == pytest.approx(2.56, abs=0.005)
    # weak turbulence: both shapes grow large
    a, b = gg_alpha_beta(1e-3)
    assert a > 1000 and b > 1000


def test_gg_pdf_against_mpmath_and_normalized():
    a, b = gg_alpha_beta(1.0)
    for h in (0.05, 0.4, 1.0, 2.7):
        ref = (2 * (mpmath.mpf(a) * b) ** ((a + b) / 2) * mpmath.mpf(h) ** ((a + b) / 2 - 1)
               * mpmath.besselk(a - b, 2 * mpmath.sqrt(a * b * h)) / (mpmath.gamma(a) * mpmath.gamma(b)))
        assert gg_pdf(h, a, b) == pytest.approx(float(ref), rel=1e-12)
    total, _ = integrate.quad(lambda x: gg_pdf(x, a, b), 0, np.inf, limit=400)
    assert total == pytest.approx(1.0, abs=1e-9)
    assert gg_pdf(0.0, a, b) == 0.0


@pytest.mark.parametrize("sigma_r2", [0.01, 0.099548, 0.5, 0.99548, 3.0, 10.0])
def test_gg_cdf_against_density_quadrature(sigma_r2):
    a, b = gg_alpha_beta(sigma_r2)
    h = np.geomspace(1e-3, 8.0, 25)
    got = gg_cdf(h, a, b)
    ref = np.array([_gg_quad_oracle(x, a, b) for x in h])
    assert np.max(np.abs(got - ref)) < 1e-9


def test_gg_mixture_and_series_agree_in_overlap():
    a, b = gg_alpha_beta(1.0)
    import irsfso.channel as ch
    h = np.geomspace(1e-3, 2.0, 30)
    series, err = ch._gg_series(h, a, b)
    good = err < 1e-13
    assert good.sum() > 10
    np.testing.assert_allclose(ch._gg_mixture(h[good], a, b), series[good], atol=1e-11)


def test_gg_cdf_diagnostics_report_fallback():
    a, b = gg_alpha_beta(0.1)
    _, info = gg_cdf(np.array([1e-3, 0.5, 1.0, 3.0]), a, b, diagnostics=True)
    assert info["mixture_points"] > 0 and not info["perturbed"]


def test_gg_near_integer_gamma_is_perturbed():
    a = 3.0 + 4e-7
    with pytest.warns(RuntimeWarning, match="near an integer"):
        val, info = gg_cdf(np.array([0.3, 1.0]), a, 1.0, diagnostics=True)
    assert info["perturbed"] and info["beta_used"] == pytest.approx(1.0 + 2e-6)
    ref = np.array([_gg_quad_oracle(x, a, 1.0) for x in (0.3, 1.0)])
    np.testing.assert_allclose(val, ref, atol=1e-5)


@pytest.mark.parametrize("turb", [CLEAR, FOG, TurbulenceModel("gamma_gamma", 3.0),
                                  TurbulenceModel("lognormal", 0.05)], ids=["clear", "fog", "gg-strong", "ln-weak"])
def test_cdfs_monotone_with_limits(turb):
    h = np.geomspace(1e-8, 1e3, 1000)
    f = np.asarray(turb.cdf(h))
    # rounding next to 1 may dip by an ulp
    assert np.all(np.diff(f) >= -4 * np.finfo(float).eps)
    assert f[0] < 1e-5 and f[-1] > 1 - 1e-9
    assert np.all((f >= 0) & (f <= 1))


def test_lognormal_convention_zero_median():
    assert lognormal_cdf(1.0, 0.3) == pytest.approx(0.5, abs=1e-16)
    h = np.geomspace(0.01, 10, 20)
    ref = stats.lognorm(s=2 * math.sqrt(0.3)).cdf(h)
    np.testing.assert_allclose(lognormal_cdf(h, 0.3), ref, rtol=1e-12)
    with pytest.raises(DomainError):
        lognormal_cdf(0.0, 0.3)


def test_turbulence_model_construction():
    t = TurbulenceModel.from_cn2("gamma_gamma", 5e-14, 1550e-9, 1000.0)
    assert t.sigma_r2 == pytest.approx(0.99548, rel=1e-4)
    assert t.gamma == pytest.approx(t.alpha - t.beta)
    assert CLEAR.gamma is None and CLEAR.sigma2 == pytest.approx(0.99548 / 4)
    custom = TurbulenceModel("gamma_gamma", 1.0, alpha=2.0, beta=1.5)
    assert (custom.alpha, custom.beta) == (2.0, 1.5)
    with pytest.raises(DomainError):
        TurbulenceModel("rician", 1.0)
    with pytest.raises(DomainError):
        TurbulenceModel("lognormal", 0.0)


@settings(max_examples=50)
@given(st.floats(-80.0, 40.0))
def test_dbm_round_trip(p_dbm):
    w = float(dbm_to_watt(p_dbm))
    assert float(watt_to_dbm(w)) == pytest.approx(p_dbm, abs=1e-12)
    assert w == pytest.approx(10 ** (p_dbm / 10) / 1000, rel=1e-15)


def test_link_budget():
    b = LinkBudget(p_t=1e-3, sigma_att=1e-4, z=1000.0)
    assert b.h_l == pytest.approx(math.exp(-0.1))
    assert outage_threshold(LinkBudget(p_t=1e-3, h_l=0.9)) == pytest.approx(1e-6 / (math.sqrt(2) * 1e-3), rel=1e-15)
    r2 = LinkBudget(p_t=2e-3, r0=2.0, n0=4e-12, h_l=0.9, eta=0.5)
    assert outage_threshold(r2) == pytest.approx(math.sqrt(3 * 4e-12) / (math.sqrt(2) * 0.5 * 2e-3 * 2), rel=1e-15)
    assert b.with_power(5.0).p_t == 5.0 and b.with_power(5.0).h_l == b.h_l
    for kwargs in ({}, {"h_l": 1.5}, {"h_l": 0.5, "z": 1.0}, {"h_l": 0.5, "p_t": 0.0}):
        base = {"p_t": 1e-3}
        base.update(kwargs)
        with pytest.raises(DomainError):
            LinkBudget(**base)
    with pytest.raises(DomainError):
        watt_to_dbm(0.0)


@pytest.mark.parametrize("turb", [CLEAR, FOG], ids=["clear", "fog"])
@pytest.mark.parametrize("sigma", [0.1, 0.2, 0.4])
def test_indicator_closed_form_equals_sifted_pipeline(turb, sigma):
    sc = PointingScenario(w_l=0.01, a_l=0.1, sigma_u=sigma * 0.1, model="indicator")
    for p_dbm in np.linspace(-50, 10, 13):
        b = LinkBudget(p_t=float(dbm_to_watt(p_dbm)), h_l=0.5)
        closed = outage_indicator_closed_form(b, turb, sc)
        generic = outage_from_distribution(b, turb, pdf_hp(sc), sc)
        assert abs(closed - generic) <= 1e-12 * max(1.0, abs(closed))


@pytest.mark.parametrize("turb", [CLEAR, FOG], ids=["clear", "fog"])
@pytest.mark.parametrize("sigma", [0.1, 0.4])
def test_erf_outage_against_displacement_space_integral(turb, sigma):
    sc = PointingScenario(w_l=0.1, a_l=0.1, sigma_u=sigma * 0.1, model="erf_approx")
    s = sc.sigma_u
    for p_dbm in (-40.0, -25.0, -10.0):
        b = LinkBudget(p_t=float(dbm_to_watt(p_dbm)), h_l=0.9)
        h0 = outage_threshold(b)

        def f(u):
            h = b.h_l * hp_erf(u, sc)
            fa = 1.0 if h <= 0 else float(turb.cdf(h0 / h))
            return u / s ** 2 * math.exp(-u * u / (2 * s * s)) * fa

        ref, _ = integrate.quad(f, 0.0, 40 * s, limit=500, epsabs=1e-14, epsrel=1e-12, points=[s, 3 * s, 0.1])
        assert outage_analytic(b, turb, sc) == pytest.approx(ref, abs=1e-9)


def test_gaussian_outage_against_displacement_space_integral():
    sc = PointingScenario(w_l=0.2, a_l=0.1, sigma_u=0.02, model="gaussian")
    from irsfso.pointing import hp_gaussian
    b = LinkBudget(p_t=float(dbm_to_watt(-25.0)), h_l=0.9)
    h0 = outage_threshold(b)
    f = lambda u: (u / 4e-4 * math.exp(-u * u / 8e-4)  # noqa: E731
                   * float(CLEAR.cdf(h0 / (b.h_l * hp_gaussian(u, sc)))))
    ref, _ = integrate.quad(f, 0.0, 0.8, limit=500, epsabs=1e-14, epsrel=1e-12)
    assert outage_analytic(b, CLEAR, sc) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("model,ratio", [("indicator", 0.1), ("erf_approx", 1.0), ("gaussian", 2.0)])
@pytest.mark.parametrize("turb", [CLEAR, FOG], ids=["clear", "fog"])
def test_outage_monotone_in_power_and_jitter(model, ratio, turb):
    powers = dbm_to_watt(np.linspace(-50, 10, 16))
    prev_curve = None
    for sigma in (0.05, 0.1, 0.2, 0.4):
        sc = PointingScenario(w_l=ratio * 0.1, a_l=0.1, sigma_u=sigma * 0.1, model=model)
        curve = outage_curve(LinkBudget(p_t=1e-3, h_l=0.9), turb, sc, powers)
        assert np.all(np.diff(curve) <= 1e-12)
        if prev_curve is not None:
            assert np.all(curve >= prev_curve - 1e-12)
        prev_curve = curve


@pytest.mark.parametrize("turb", [CLEAR, FOG], ids=["clear", "fog"])
def test_indicator_outage_above_floor(turb):
    sc = PointingScenario(w_l=0.01, a_l=0.1, sigma_u=0.04, model="indicator")
    floor = outage_lower_bound(sc)
    assert floor == pytest.approx(1 - displacement_cdf(0.1, 0.04), rel=1e-15)
    curve = outage_curve(LinkBudget(p_t=1e-3, h_l=0.9), turb, sc, dbm_to_watt(np.linspace(-50, 40, 46)))
    assert np.all(curve >= floor)
    assert curve[-1] == pytest.approx(floor, rel=1e-12)


def test_outage_special_cases():
    b = LinkBudget(p_t=1e-3, h_l=0.9)
    with pytest.raises(DomainError):
        outage_analytic(b, CLEAR, PointingScenario(w_l=0.2, a_l=0.1, sigma_u=0.01, model="exact"))
    no_jitter = PointingScenario(w_l=0.1, a_l=0.1, sigma_u=0.0, model="erf_approx")
    h0 = outage_threshold(b)
    assert outage_analytic(b, CLEAR, no_jitter) == pytest.approx(float(CLEAR.cdf(h0 / (0.9 * no_jitter.a0))))
    assert outage_lower_bound(PointingScenario(0.01, 0.1, 0.0, model="indicator")) == 0.0
    with pytest.raises(DomainError):
        outage_lower_bound(no_jitter)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        outage_analytic(b, FOG, PointingScenario(w_l=0.1, a_l=0.1, sigma_u=0.02))
