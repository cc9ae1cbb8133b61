import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from swbi.econometrics import (
    GarchModel,
    ScenarioSet,
    arma_residuals,
    _pack,
    _unpack,
    fit_garch,
    fit_innovation_law,
    fit_joint,
    garch_filter,
    gaussian_qll,
    innovations,
    ljung_box,
    risk_summary,
    simulate_stationary,
)
from swbi.errors import NumericalError, ValidationError
from swbi.ghdist import GHParams, logpdf
from swbi.ghdist import sample as gh_sample


def standardize(p: GHParams) -> GHParams:
    """Same family, shifted and scaled to mean 0 and variance 1."""
    m, s = p.mean(), math.sqrt(p.var())
    return GHParams(p.lam, p.alpha * s, p.beta * s, p.delta / s, (p.mu - m) / s, p.variant)


UNIT_VG = standardize(GHParams.vg(1.5, 2.0, -0.5))


def garch_path(omega, a, b, n, seed, ar=0.0, ma=0.0, law=None, burn=1000):
    """Plain recursive simulation of one ARMA(1,1)-GARCH(1,1) path."""
    gen = np.random.default_rng(seed)
    eps = gen.standard_normal(n + burn) if law is None else gh_sample(law, n + burn, gen)
    h = omega / (1 - a - b)
    e_prev = r_prev = 0.0
    out = np.empty(n + burn)
    for t in range(n + burn):
        if t:
            h = omega + a * h + b * e_prev * e_prev
        e = math.sqrt(h) * eps[t]
        r_prev = ar * r_prev + ma * e_prev + e
        e_prev = e
        out[t] = r_prev
    return out[burn:]


# -- GarchModel ------------------------------------------------------------------


def test_model_invariants():
    with pytest.raises(ValidationError):
        GarchModel(0.0, 0.0, 0.0, 0.1, 0.1)
    with pytest.raises(ValidationError):
        GarchModel(0.0, 0.0, 1.0, -0.1, 0.1)
    with pytest.raises(ValidationError):
        GarchModel(1.0, 0.0, 1.0, 0.1, 0.1)
    m = GarchModel(0.1, 0.0, 0.2, 0.5, 0.3)
    assert m.stationary and m.unconditional_variance == pytest.approx(1.0)


def test_model_dict_round_trip():
    m = GarchModel(0.1, -0.2, 0.05, 0.8, 0.1, 0.02, 0.001, UNIT_VG, -123.4, 31, 0.3, -0.1)
    assert GarchModel.from_dict({k: str(v) for k, v in m.to_dict().items()}) == m
    n = GarchModel(0.0, 0.0, 1.0, 0.0, 0.0)
    back = GarchModel.from_dict(n.to_dict())
    assert back.innovation is None and back.omega == 1.0


def test_from_dict_missing_key():
    with pytest.raises(ValidationError, match="omega"):
        GarchModel.from_dict({"ar": 0, "ma": 0, "a": 0, "b": 0})


def test_transform_round_trip():
    theta = _pack(0.3, -0.4, 0.07, 0.6, 0.25)
    np.testing.assert_allclose(_unpack(theta), (0.3, -0.4, 0.07, 0.6, 0.25), rtol=1e-12)


# -- fit_garch -------------------------------------------------------------------


@pytest.mark.slow
def test_white_noise_fit():
    x = np.random.default_rng(1).standard_normal(100_000)
    m = fit_garch(x)
    assert m.a + m.b < 0.05
    assert m.omega / (1 - m.a - m.b) == pytest.approx(1.0, rel=0.05)


@pytest.mark.slow
def test_garch_recovery():
    x = garch_path(0.05, 0.9, 0.05, 100_000, seed=2)
    m = fit_garch(x)
    for got, want in ((m.omega, 0.05), (m.a, 0.9), (m.b, 0.05)):
        assert got == pytest.approx(want, rel=0.10)
    # ar = -ma is white noise for any value, so only the first psi-weight ar + ma is identified
    assert abs(m.ar + m.ma) < 0.02


def test_arma_recovery_with_constant_variance():
    x = garch_path(1.0, 0.0, 0.0, 20_000, seed=3, ar=0.5, ma=0.2)
    m = fit_garch(x)
    assert m.ar == pytest.approx(0.5, abs=0.05)
    assert m.ma == pytest.approx(0.2, abs=0.05)


def test_constant_series_rejected():
    with pytest.raises(ValidationError, match="variance"):
        fit_garch(np.full(50, 0.3))


def test_short_and_nonfinite_series_rejected():
    with pytest.raises(ValidationError):
        fit_garch(np.arange(19.0))
    x = np.random.default_rng(0).standard_normal(40)
    x[5] = np.nan
    with pytest.raises(ValidationError):
        fit_garch(x)


def test_fit_is_deterministic():
    x = garch_path(0.1, 0.6, 0.2, 500, seed=4)
    assert fit_garch(x) == fit_garch(x)


def test_likelihood_beats_moment_start():
    x = garch_path(0.1, 0.7, 0.2, 2000, seed=5)
    m = fit_garch(x)
    v = float(np.mean(x ** 2))
    assert m.loglik == pytest.approx(gaussian_qll(x, m.ar, m.ma, m.omega, m.a, m.b), rel=1e-12)
    assert m.loglik >= gaussian_qll(x, 0.0, 0.0, v * 0.05, 0.85, 0.10)


def test_index_series_skips_base_year():
    from swbi.index import build_index
    from swbi.panel import ReturnPanel

    gen = np.random.default_rng(6)
    r = np.concatenate([[0.0], gen.standard_normal(60) * 0.1])
    ix = build_index(ReturnPanel(("X",), np.arange(1950, 2011), r[None, :]))
    assert fit_garch(ix) == fit_garch(ix.active())


# -- filtering and innovations ----------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=40),
    st.floats(1e-4, 5),
    st.floats(0, 0.7),
    st.floats(0, 0.29),
)
def test_filtered_variance_at_least_omega(e, omega, a, b):
    h = garch_filter(np.array(e), omega, a, b)
    assert h[0] == pytest.approx(omega / (1 - a - b))
    assert np.all(h >= omega * (1 - 1e-12))


def test_filter_matches_recursion():
    e = np.random.default_rng(7).standard_normal(30)
    h = garch_filter(e, 0.1, 0.6, 0.3)
    ref = [0.1 / 0.1]
    for t in range(1, 30):
        ref.append(0.1 + 0.6 * ref[-1] + 0.3 * e[t - 1] ** 2)
    np.testing.assert_allclose(h, ref, rtol=1e-12)


def test_constant_variance_innovations():
    x = np.random.default_rng(8).standard_normal(25) * 3
    m = GarchModel(0.0, 0.0, 4.0, 0.0, 0.0)
    eps = innovations(m, x)
    assert eps.kind == "innovation" and len(eps) == x.size
    np.testing.assert_allclose(eps.draws, x / 2.0, rtol=1e-15)


@pytest.mark.slow
def test_innovations_have_unit_variance():
    x = garch_path(0.05, 0.85, 0.1, 100_000, seed=9)
    eps = innovations(fit_garch(x), x).draws
    assert np.var(eps) == pytest.approx(1.0, rel=0.02)


def test_second_stage_fits_innovation_law():
    x = garch_path(0.05, 0.85, 0.1, 20_000, seed=10, law=UNIT_VG)
    m, ll, report = fit_innovation_law(fit_garch(x), x, "VG")
    eps = innovations(m, x).draws
    assert m.innovation.variant == "VG"
    assert ll == pytest.approx(float(np.sum(logpdf(m.innovation, eps))), rel=1e-9)
    assert report.sample_size == eps.size


@pytest.mark.slow
def test_joint_fit():
    x = garch_path(0.05, 0.85, 0.1, 20_000, seed=11, law=UNIT_VG)
    two = fit_garch(x)
    two, _, _ = fit_innovation_law(two, x, "VG")
    joint, report = fit_joint(x, "VG")
    p = joint.innovation
    # renormalized so that h_t is the conditional second moment of e_t
    assert p.var() + p.mean() ** 2 == pytest.approx(1.0, rel=1e-8)
    # the one-stage likelihood is at least the exact likelihood at the two-stage point
    e = arma_residuals(x, two.ar, two.ma)
    h = garch_filter(e, two.omega, two.a, two.b)
    ll_two = float(np.sum(logpdf(two.innovation, e / np.sqrt(h)) - 0.5 * np.log(h)))
    assert joint.loglik >= ll_two - 1e-6
    assert joint.a == pytest.approx(0.85, abs=0.05)
    assert joint.b == pytest.approx(0.1, abs=0.03)
    assert report.sample_size == x.size


# -- simulate_stationary -----------------------------------------------------------


def test_iid_reduction_passes_ks():
    m = GarchModel(0.0, 0.0, 0.25, 0.0, 0.0)
    s = simulate_stationary(m, 20_000, seed=12, burn_in=5)
    assert s.kind == "return" and len(s) == 20_000
    assert stats.kstest(s.draws, stats.norm(scale=0.5).cdf).pvalue > 0.01


def test_simulation_determinism_and_workers():
    m = GarchModel(0.1, 0.0, 0.05, 0.85, 0.1, innovation=UNIT_VG)
    one = simulate_stationary(m, 20_000, seed=13, burn_in=50)
    again = simulate_stationary(m, 20_000, seed=13, burn_in=50, workers=4)
    other = simulate_stationary(m, 20_000, seed=14, burn_in=50)
    np.testing.assert_array_equal(one.draws, again.draws)
    assert not np.array_equal(one.draws, other.draws)
    assert "burn-in 50" in one.provenance["method"]


def test_stationary_variance():
    m = GarchModel(0.0, 0.0, 0.1, 0.5, 0.2)
    s = simulate_stationary(m, 100_000, seed=15, burn_in=100)
    assert np.var(s.draws) == pytest.approx(m.unconditional_variance, rel=0.03)


def test_simulation_refusals():
    m = GarchModel(0.0, 0.0, 0.1, 0.6, 0.4)
    with pytest.raises(ValidationError, match="stationary"):
        simulate_stationary(m, 10, seed=1)
    ok = GarchModel(0.0, 0.0, 0.1, 0.5, 0.2)
    with pytest.raises(ValidationError):
        simulate_stationary(ok, 10, seed=None)
    with pytest.raises(ValidationError):
        simulate_stationary(ok, 0, seed=1)


def test_scenario_set_rejects_non_finite():
    with pytest.raises(NumericalError):
        ScenarioSet([1.0, np.inf], 0)
    with pytest.raises(ValidationError):
        ScenarioSet([1.0], 0, kind="price")


# -- risk_summary ----------------------------------------------------------------


def test_hand_order_statistics():
    r = risk_summary(np.arange(-3.0, 7.0), levels=[0.10])
    assert r.var[0.10] == -3.0 and r.es[0.10] == -3.0


def test_hand_order_statistics_twenty_percent():
    r = risk_summary(np.arange(-3.0, 7.0), levels=[0.2])
    assert r.var[0.2] == -2.0 and r.es[0.2] == -2.5


def test_normal_oracle():
    x = np.random.default_rng(16).standard_normal(1_000_000)
    r = risk_summary(x, levels=[0.05])
    z = stats.norm.ppf(0.05)
    assert r.var[0.05] == pytest.approx(z, abs=0.01)
    assert r.es[0.05] == pytest.approx(-stats.norm.pdf(z) / 0.05, abs=0.01)
    assert abs(r.skewness) < 0.01 and abs(r.excess_kurtosis) < 0.02


def test_too_few_draws():
    with pytest.raises(ValidationError, match="too few"):
        risk_summary(np.arange(50.0), levels=[0.01])
    with pytest.raises(ValidationError):
        risk_summary(np.arange(50.0), levels=[1.5])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=100, max_size=300))
def test_summary_invariants(x):
    r = risk_summary(np.array(x))
    assert r.minimum <= r.median <= r.maximum
    qs = sorted(r.var)
    for q in qs:
        assert r.es[q] <= r.var[q]
    for lo, hi in zip(qs, qs[1:]):
        assert r.var[lo] <= r.var[hi] and r.es[lo] <= r.es[hi]


def test_rows_cover_levels():
    r = risk_summary(np.random.default_rng(17).standard_normal(1000))
    labels = [k for k, _ in r.rows()]
    assert labels[:6] == ["Min", "Max", "Mean", "Median", "Skewness", "Excess kurtosis"]
    assert "VaR 0.01" in labels and "ES 0.1" in labels


# -- ljung_box -------------------------------------------------------------------


def test_ljung_box_calibration():
    hits = sum(ljung_box(np.random.default_rng(s).standard_normal(10_000), 10)[1] > 0.01 for s in range(300))
    # binomial(300, 0.99): mean 297, sd 1.7
    assert hits >= 291


def test_ljung_box_detects_ar1():
    x = garch_path(1.0, 0.0, 0.0, 10_000, seed=18, ar=0.9)
    assert ljung_box(x, 10)[1] < 1e-6


def test_ljung_box_against_manual_formula():
    x = np.random.default_rng(19).standard_normal(200)
    y = x - x.mean()
    n, h = len(x), 5
    rho = [np.sum(y[k:] * y[:-k]) / np.sum(y * y) for k in range(1, h + 1)]
    q = n * (n + 2) * sum(r ** 2 / (n - k) for k, r in zip(range(1, h + 1), rho))
    got_q, got_p = ljung_box(x, h)
    assert got_q == pytest.approx(q, rel=1e-12)
    assert got_p == pytest.approx(stats.chi2.sf(q, h), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_ljung_box_nonnegative(seed):
    assert ljung_box(np.random.default_rng(seed).standard_normal(30), 5)[0] >= 0


def test_ljung_box_errors():
    with pytest.raises(ValidationError):
        ljung_box(np.ones(30), 5)
    with pytest.raises(ValidationError):
        ljung_box(np.arange(10.0), 5)
