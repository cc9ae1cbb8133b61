"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line (collected in the terminal summary)
before asserting, so a failing criterion still reports its measured numbers.
"""
import math
import time

import numpy as np
import pytest
from scipy import integrate, optimize, stats

from swbi.econometrics import GarchModel, risk_summary
from swbi.ghdist import BivariateGHParams, GHParams, cdf, density, fit_bivariate, fit_univariate, mgf, sample, sample2
from swbi.index import build_index
from swbi.panel import ReturnPanel
from swbi.pricing import bs_call, esscher_gap, price_options, simulate_riskneutral_horizons, solve_esscher
from swbi.riskbudget import etl_budget, std_budget
from swbi.stress import stress_measures
from swbi.tails import var_es

from conftest import FIXED_RETURNS

pytestmark = pytest.mark.acceptance


def run(acceptance, number, title, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure of the criterion, reported as such
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    seconds = time.perf_counter() - t0
    acceptance(number, title, ok, detail, seconds)
    assert ok, detail


def unit(p: GHParams) -> GHParams:
    m, s = p.mean(), math.sqrt(p.var())
    return GHParams(p.lam, p.alpha * s, p.beta * s, p.delta / s, (p.mu - m) / s, p.variant)


# -- 1 -------------------------------------------------------------------------------


def test_criterion_1_martingale(acceptance):
    def check():
        t0 = time.perf_counter()
        worst = 0.0
        vg = unit(GHParams.vg(1.5, 2.0, -0.5))
        for law in (None, vg):
            m = GarchModel(0.0, 0.0, 0.002, 0.85, 0.1, lambda0=0.1, riskfree=0.001, innovation=law, last_h=0.03, last_e=-0.2)
            paths = simulate_riskneutral_horizons(m, [1, 5, 10], 100_000, 100.0, seed=101)
            for T, s in paths.items():
                disc = s.draws * math.exp(-m.riskfree * T)
                z = abs(disc.mean() - 100.0) / (disc.std(ddof=1) / math.sqrt(disc.size))
                worst = max(worst, z)
        elapsed = time.perf_counter() - t0
        return worst <= 3 and elapsed < 60, f"max |mean - I0| = {worst:.2f} SE over normal/VG x T=1,5,10"

    run(acceptance, 1, "martingale check", check)


# -- 2 -------------------------------------------------------------------------------


def test_criterion_2_black_scholes(acceptance):
    def check():
        t0 = time.perf_counter()
        m = GarchModel(0.0, 0.0, 0.04, 0.0, 0.0)
        paths = simulate_riskneutral_horizons(m, [1, 2, 3, 4, 5], 100_000, 1.0, seed=102)
        grid = price_options(paths, [0.8, 0.9, 1.0, 1.1, 1.2])
        closed = float(bs_call(1.0, 1.0, 1.0, 0.0, 0.2))
        z = abs(grid.call[0, 2] - closed) / grid.call_se[0, 2]
        dev = float(np.nanmax(np.abs(grid.implied_vol - 0.2)))
        elapsed = time.perf_counter() - t0
        ok = z <= 3 and abs(closed - 0.0797) < 5e-5 and dev <= 0.01 and not np.isnan(grid.implied_vol).any() and elapsed < 30
        return ok, f"ATM call {grid.call[0, 2]:.5f} vs {closed:.5f} ({z:.2f} SE); max |IV - 0.20| = {dev:.4f}"

    run(acceptance, 2, "Black-Scholes reduction", check)


# -- 3 -------------------------------------------------------------------------------


def test_criterion_3_esscher_closed_form(acceptance):
    def check():
        worst = worst_root = 0.0
        hs = np.geomspace(1e-5, 1.0, 11)
        for lam in np.linspace(-3, 3, 13):
            m = GarchModel(0.0, 0.0, 0.1, 0.0, 0.0, lambda0=lam, riskfree=0.002)
            theta = solve_esscher(m, hs).theta
            worst = max(worst, float(np.max(np.abs(theta + lam / np.sqrt(hs)))))
            # an independent bracketed root of the Esscher equation agrees as well
            for h, th in zip(hs, theta):
                root = optimize.brentq(lambda t: float(esscher_gap(m, h, t)), th - 10, th + 10, xtol=1e-14, rtol=1e-15)
                worst_root = max(worst_root, abs(root - th))
        return worst <= 1e-10 and worst_root <= 1e-10, f"max |theta + lambda0/sqrt(h)| = {worst:.1e}, vs brentq {worst_root:.1e}"

    run(acceptance, 3, "Esscher closed form", check)


# -- 4 -------------------------------------------------------------------------------

GRID = [
    GHParams(1.0, 2.0, 0.5, 1.0, 0.0),
    GHParams(-1.5, 1.5, -0.7, 0.6, 0.3),
    GHParams(0.4, 3.0, 1.0, 2.0, -1.0),
    GHParams(5.0, 4.0, 0.0, 0.2, 0.0),
    GHParams.vg(1.5, 2.0, 0.4),
    GHParams.vg(0.7, 1.2, -0.5, 0.2),
    GHParams.vg(3.0, 5.0, 2.0, -0.1),
    GHParams.vg(10.0, 8.0, 0.0),
    GHParams.nig(1.0, 0.0, 1.0),
    GHParams.nig(2.0, -1.0, 0.5, 0.5),
    GHParams.nig(1.2, 0.6, 2.0),
    GHParams.nig(6.0, 3.0, 0.3, -0.2),
]


def test_criterion_4_gh_conformance(acceptance):
    def check():
        worst_int = 0.0
        for p in GRID:
            # whole line, split at the mode region so quad resolves the VG cusp
            total = sum(integrate.quad(lambda x: density(p, x), a, b, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
                        for a, b in ((-np.inf, p.mu), (p.mu, np.inf)))
            worst_int = max(worst_int, abs(total - 1))
        ks_fail = []
        for p in (GRID[1], GRID[4], GRID[9]):
            x = sample(p, 100_000, 104)
            if stats.kstest(x, lambda t: cdf(p, t)).pvalue < 0.01:
                ks_fail.append(p.variant)
        worst_z = 0.0
        p = GRID[0]
        x = sample(p, 1_000_000, 105)
        for u in (-0.5, 0.3, 0.8):  # strip is (-alpha - beta, alpha - beta) = (-2.5, 1.5)
            y = np.exp(u * x)
            worst_z = max(worst_z, abs(y.mean() - mgf(p, u)) / (y.std(ddof=1) / math.sqrt(y.size)))
        ok = worst_int <= 1e-6 and not ks_fail and worst_z <= 3
        return ok, f"max |integral - 1| = {worst_int:.1e}; KS failures {ks_fail or 'none'}; MGF max {worst_z:.2f} SE"

    run(acceptance, 4, "GH distribution conformance", check)


# -- 5 -------------------------------------------------------------------------------


def rel_errors(true, est, location):
    out = {}
    for k in true:
        t, e = np.ravel(true[k]), np.ravel(est[k])
        if k in location:
            out[k] = float(np.max(np.abs(e - t)))
        else:
            out[k] = float(np.max(np.abs(e - t) / np.abs(t)))
    return out


def test_criterion_5_fit_recovery(acceptance):
    def check():
        t0 = time.perf_counter()
        p = GHParams.vg(1.5, 2.0, 0.4)
        q, _ = fit_univariate(sample(p, 100_000, 1), "VG")
        uni = rel_errors({k: getattr(p, k) for k in ("lam", "alpha", "beta", "mu")},
                         {k: getattr(q, k) for k in ("lam", "alpha", "beta", "mu")}, {"mu"})
        bp = BivariateGHParams(-0.5, 0.3, 0.2, (0.1, -0.2), ((1.2, 0.5), (0.5, 1.25 / 1.2)), (0.4, -0.3)).normalized()
        bq = fit_bivariate(sample2(bp, 100_000, 2), "GH").params
        keys = ("lam", "chi", "psi", "mu", "sigma", "gamma")
        bi = rel_errors({k: getattr(bp, k) for k in keys}, {k: getattr(bq, k) for k in keys}, {"mu"})
        elapsed = time.perf_counter() - t0
        bad = [f"{k}={v:.3f}" for k, v in {**uni, **{f"biv.{k}": v for k, v in bi.items()}}.items()
               if v > (0.02 if k.endswith("mu") else 0.05)]
        worst_rel = max(v for k, v in {**uni, **bi}.items() if k != "mu")
        return not bad and elapsed < 120, f"worst relative error {worst_rel:.3f}; out of tolerance: {bad or 'none'}"

    run(acceptance, 5, "fit recovery", check)


# -- 6 -------------------------------------------------------------------------------


def test_criterion_6_risk_oracle(acceptance):
    def check():
        gen = np.random.default_rng(106)
        r = risk_summary(gen.standard_normal(1_000_000), levels=[0.05])
        dv, de = abs(r.var[0.05] + 1.6449), abs(r.es[0.05] + 2.0627)
        z = gen.standard_normal((1_000_000, 2))
        dc = max(abs(stress_measures(z, q).covar - stats.norm.ppf(q)) for q in (0.05, 0.10))
        return dv <= 0.01 and de <= 0.01 and dc <= 0.02, f"|VaR err| {dv:.4f}, |ES err| {de:.4f}, |CoVaR err| {dc:.4f}"

    run(acceptance, 6, "risk-measure oracle", check)


# -- 7 -------------------------------------------------------------------------------


def test_criterion_7_euler(acceptance):
    def check():
        worst_std = worst_etl = worst_pctr = 0.0
        for seed in range(100):
            gen = np.random.default_rng(seed)
            k = int(gen.integers(2, 14))
            x = gen.standard_t(4, size=(int(gen.integers(40, 400)), k)) @ gen.normal(size=(k, k)) * 0.1
            w = gen.uniform(-0.5, 1.5, k)
            w /= w.sum()
            s = std_budget(x, w)
            sd = math.sqrt(w @ np.cov(x, rowvar=False) @ w)
            worst_std = max(worst_std, abs(s.mctr.sum() - sd))
            worst_pctr = max(worst_pctr, abs(s.pctr.sum() - 1))
            for q in (0.05, 0.01):
                e = etl_budget(x, w, q)
                _, es = var_es(np.sort(x * w, axis=1).sum(axis=1), q)
                worst_etl = max(worst_etl, abs(e.mctr.sum() + es) / abs(es))
                worst_pctr = max(worst_pctr, abs(e.pctr.sum() - 1))
        # ETL identity: both sides are the same tail average summed in a different
        # order, so "exact" means equal up to floating-point summation (relative 1e-12)
        ok = worst_std <= 1e-10 and worst_etl <= 1e-12 and worst_pctr <= 1e-10
        return ok, f"Std gap {worst_std:.1e}, ETL relative gap {worst_etl:.1e}, PCTR sum gap {worst_pctr:.1e}"

    run(acceptance, 7, "Euler identities", check)


# -- 8 -------------------------------------------------------------------------------


def index_oracle(rows):
    """Step-by-step recomputation in plain Python."""
    n = len(rows)
    m_i = [sum(r) / len(r) for r in rows]
    s_i = [math.sqrt(sum((v - m) ** 2 for v in r) / (len(r) - 1)) for r, m in zip(rows, m_i)]
    R = [sum((rows[i][t] - m_i[i]) / s_i[i] for i in range(n)) / math.sqrt(n) for t in range(len(rows[0]))]
    m, s = sum(m_i) / n, sum(s_i) / n
    return [m + s * v for v in R]


def test_criterion_8_index_oracle(acceptance):
    def check():
        panel = ReturnPanel(("A", "B", "C"), np.arange(2000, 2005), FIXED_RETURNS.copy())
        gap = float(np.max(np.abs(build_index(panel).r - index_oracle(FIXED_RETURNS.tolist()))))
        x = np.array([0.0, 0.12, -0.05, 0.33, 0.01, -0.2])
        single = build_index(ReturnPanel(("X",), np.arange(2000, 2006), x[None, :])).r
        # standardizing and un-standardizing cancel algebraically; in floating point the
        # round trip m + s * ((x - m) / s) may differ from x in the last few bits
        ulps = float(np.max(np.abs(single - x) / np.spacing(np.maximum(np.abs(x), 1e-300))))
        exact = ulps <= 4
        return gap <= 1e-12 and exact, f"max gap {gap:.1e}; single-factor round trip within {ulps:.0f} ulp"

    run(acceptance, 8, "index oracle", check)


# -- 9 -------------------------------------------------------------------------------


def test_criterion_9_data_reproduction(acceptance):
    # The historical 1986-2016 government panel is not shipped and could not be
    # rebuilt offline, so this conditional criterion is waived.
    acceptance(9, "data reproduction", None, "waived: source panel not reconstructed", 0.0)
