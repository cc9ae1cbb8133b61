"""Risk-neutral Monte Carlo option pricing under the Esscher transform.

Under the real-world measure the index log-return is

    r_t = r' + lambda0 sqrt(h_t) - h_t / 2 + sqrt(h_t) eps_t,

with h_t following the GARCH(1,1) recursion of the fitted model; the ARMA
terms play no role in pricing.  Given h_t, the Esscher parameter theta_t
solves M(1 + theta) = M(theta) exp(r'), where M is the conditional MGF of
r_t.  Tilting by theta_t turns the innovation law GH(lam, alpha, beta, delta,
mu) into GH(lam, alpha, beta + sqrt(h_t) theta_t, delta, mu), which makes
exp(r_t - r') a martingale increment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import elementwise

from . import rng as rngmod
from .econometrics import GarchModel, ScenarioSet
from .errors import DomainError, SolverError, ValidationError
from .ghdist import log_mgf
from .ghdist.univariate import sample_tilted


@dataclass(frozen=True)
class EsscherSolution:
    theta: np.ndarray
    residual: np.ndarray  # M(1+theta) - M(theta) e^{r'}, divided by M(theta)
    bracket: tuple

    def __getitem__(self, i):
        return EsscherSolution(self.theta[i], self.residual[i], (self.bracket[0][i], self.bracket[1][i]))


def _drift(model: GarchModel, sh: np.ndarray, drift_correction: bool) -> np.ndarray:
    h = sh ** 2
    return model.riskfree + model.lambda0 * sh - (0.5 * h if drift_correction else 0.0)


def esscher_gap(model: GarchModel, h, theta, drift_correction: bool = True):
    """log M(1+theta) - log M(theta) - r' (increasing in theta)."""
    sh = np.sqrt(np.asarray(h, dtype=float))
    theta = np.asarray(theta, dtype=float)
    mu = _drift(model, sh, drift_correction)
    if model.innovation is None:
        lm1 = 0.5 * (sh * (1 + theta)) ** 2
        lm0 = 0.5 * (sh * theta) ** 2
    else:
        lm1 = log_mgf(model.innovation, sh * (1 + theta))
        lm0 = log_mgf(model.innovation, sh * theta)
    return mu + lm1 - lm0 - model.riskfree


def admissible_strip(model: GarchModel, h):
    """Open theta-interval where M(theta) and M(1+theta) are both finite."""
    sh = np.sqrt(np.asarray(h, dtype=float))
    p = model.innovation
    if p is None:
        inf = np.full(sh.shape, np.inf)
        return -inf, inf
    return (-p.alpha - p.beta) / sh, (p.alpha - p.beta) / sh - 1.0


def solve_esscher(model: GarchModel, h, *, drift_correction: bool = True) -> EsscherSolution:
    """Esscher parameter theta_t for each conditional variance in ``h``.

    Normal innovations have the closed form theta = -lambda0 / sqrt(h) (with
    the -h/2 drift); otherwise a bracketed root search runs over the
    admissible strip.  ``drift_correction=False`` drops the -h/2 drift term
    and exists for testing.
    """
    h = np.asarray(h, dtype=float)
    scalar = h.ndim == 0
    h = np.atleast_1d(h)
    if np.any(~(h > 0)) or not np.all(np.isfinite(h)):
        raise ValidationError("conditional variance must be positive and finite")
    sh = np.sqrt(h)

    if model.innovation is None:
        if drift_correction:
            theta = -model.lambda0 / sh
        else:
            theta = -model.lambda0 / sh - 0.5
        resid = np.expm1(esscher_gap(model, h, theta, drift_correction))
        inf = np.full(h.shape, np.inf)
        sol = EsscherSolution(theta, resid, (-inf, inf))
        return sol[0] if scalar else sol

    lo, hi = admissible_strip(model, h)
    if np.any(hi <= lo):
        bad = h[hi <= lo][0]
        raise SolverError(
            f"empty admissible strip for h_t={bad:.6g}: need 2*alpha/sqrt(h) > 1 "
            f"(alpha={model.innovation.alpha:.6g})"
        )
    # Pull the ends in slightly so both MGF arguments stay strictly inside.
    pad = 1e-12 * (hi - lo) + 1e-15 * np.maximum(np.abs(lo), np.abs(hi))
    a, b = lo + pad, hi - pad

    def f(t, hh):
        return esscher_gap(model, hh, t, drift_correction)

    try:
        fa, fb = f(a, h), f(b, h)
    except DomainError as exc:  # pragma: no cover - pad keeps arguments inside
        raise SolverError(str(exc)) from exc
    nosign = ~((fa <= 0) & (fb >= 0))
    if np.any(nosign):
        k = int(np.flatnonzero(nosign)[0])
        raise SolverError(
            f"Esscher equation has no root for h_t={h[k]:.6g}: the admissible strip "
            f"({lo[k]:.6g}, {hi[k]:.6g}) gives residuals {fa[k]:.3g} .. {fb[k]:.3g} without a sign change"
        )
    res = elementwise.find_root(
        f, (a, b), args=(h,), tolerances=dict(xatol=0.0, xrtol=4 * np.finfo(float).eps, fatol=1e-13, frtol=0.0)
    )
    theta = np.asarray(res.x, dtype=float)
    if not np.all(res.success):
        k = int(np.flatnonzero(~np.asarray(res.success))[0])
        raise SolverError(f"Esscher root search failed for h_t={h[k]:.6g}")
    resid = np.expm1(f(theta, h))
    sol = EsscherSolution(theta, resid, (lo, hi))
    return sol[0] if scalar else sol


class _MemoSolver:
    """theta lookup keyed on h quantized to 1e-12 (relative)."""

    def __init__(self, model: GarchModel, drift_correction: bool = True):
        self.model = model
        self.drift_correction = drift_correction
        self.cache: dict[float, float] = {}

    def __call__(self, h: np.ndarray) -> np.ndarray:
        keys = np.round(np.log(h), 12)
        uniq, inverse = np.unique(keys, return_inverse=True)
        missing = [k for k in uniq.tolist() if k not in self.cache]
        if missing:
            sol = solve_esscher(self.model, np.exp(np.array(missing)), drift_correction=self.drift_correction)
            self.cache.update(zip(missing, np.atleast_1d(sol.theta).tolist()))
            if len(self.cache) > 200_000:
                self.cache.clear()
        vals = np.array([self.cache[k] for k in uniq.tolist()])
        return vals[inverse.ravel()]


def _path_block(model, horizons, n, gen, drift_correction=True):
    """Cumulative log-returns at each horizon for ``n`` paths (shape (len(horizons), n))."""
    tmax = max(horizons) if horizons else 0
    out = np.zeros((len(horizons), n))
    want = {T: j for j, T in enumerate(horizons)}
    h = np.full(n, model.forecast_h())
    cum = np.zeros(n)
    solver = _MemoSolver(model, drift_correction)
    for t in range(1, tmax + 1):
        try:
            theta = solver(h)
        except SolverError as exc:
            raise SolverError(f"period t={t}: {exc}") from exc
        sh = np.sqrt(h)
        if model.innovation is None:
            eps = gen.standard_normal(n) + sh * theta
        else:
            eps = sample_tilted(model.innovation, model.innovation.beta + sh * theta, gen)
        shock = sh * eps
        cum += _drift(model, sh, drift_correction) + shock
        if t in want:
            out[want[t]] = cum
        h = model.omega + model.a * h + model.b * shock ** 2
    return out


def simulate_riskneutral_horizons(
    model: GarchModel, horizons, n: int, I0: float, seed: int, *, workers: int = 1
) -> dict:
    """Terminal prices for several horizons from one shared path set.

    Returns ``{T: ScenarioSet(kind="terminal-price")}``.  Paths run in
    fixed-size blocks with derived seeds (step ``"riskneutral"``).
    """
    horizons = sorted({int(T) for T in horizons})
    if any(T < 0 for T in horizons):
        raise ValidationError("maturities must be >= 0")
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not I0 > 0:
        raise ValidationError("I0 must be positive")
    if seed is None:
        raise ValidationError("simulate_riskneutral requires an explicit seed")

    def block(k, lo, hi):
        gen = rngmod.stream(seed, "riskneutral", k)
        return _path_block(model, horizons, hi - lo, gen)

    cum = np.concatenate(rngmod.run_blocks(block, n, workers), axis=1)
    out = {}
    for j, T in enumerate(horizons):
        prov = {
            "maturity": T,
            "I0": I0,
            "riskfree": model.riskfree,
            "innovation": "normal" if model.innovation is None else model.innovation.variant,
            "h1": model.forecast_h(),
        }
        out[T] = ScenarioSet(I0 * np.exp(cum[j]), seed, prov, "terminal-price")
    return out


def simulate_riskneutral(model: GarchModel, T: int, n: int, I0: float, seed: int, *, workers: int = 1) -> ScenarioSet:
    """N terminal index levels I_T = I0 exp(sum of risk-neutral returns)."""
    return simulate_riskneutral_horizons(model, [T], n, I0, seed, workers=workers)[int(T)]


# -- Black-Scholes helpers ---------------------------------------------------


def bs_call(S, K, T, r, sigma):
    S, K, T, sigma = (np.asarray(v, dtype=float) for v in (S, K, T, sigma))
    with np.errstate(divide="ignore", invalid="ignore"):
        vol = sigma * np.sqrt(T)
        d1 = (np.log(S / K) + r * T) / vol + 0.5 * vol
        price = S * stats.norm.cdf(d1) - K * np.exp(-r * T) * stats.norm.cdf(d1 - vol)
    intrinsic = np.maximum(S - K * np.exp(-r * T), 0.0)
    return np.where(vol > 0, price, intrinsic)


def implied_vol_bs(price, S, K, T, r, lo: float = 1e-6, hi: float = 5.0, tol: float = 1e-8):
    """Black-Scholes implied volatility by bisection; NaN marks prices outside the band."""
    price, K, T = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (price, K, T)))
    low_band = np.maximum(S - K * np.exp(-r * T), 0.0)
    ok = (price > low_band) & (price < S) & (T > 0)
    a = np.full(price.shape, lo)
    b = np.full(price.shape, hi)
    n_iter = int(math.ceil(math.log2((hi - lo) / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (a + b)
        above = bs_call(S, K, T, r, mid) > price
        b = np.where(above, mid, b)
        a = np.where(above, a, mid)
    vol = 0.5 * (a + b)
    # the band can be satisfied yet the root lie outside [lo, hi]
    ok &= (bs_call(S, K, T, r, lo) <= price) & (bs_call(S, K, T, r, hi) >= price)
    return np.where(ok, vol, np.nan)


# -- option grid -------------------------------------------------------------


@dataclass
class OptionGrid:
    maturities: np.ndarray
    strikes: np.ndarray
    I0: float
    riskfree: float
    t: int
    call: np.ndarray  # (maturity, strike)
    put: np.ndarray
    call_se: np.ndarray
    put_se: np.ndarray
    mean_terminal: np.ndarray  # per maturity
    n_paths: int
    implied_vol: np.ndarray = field(default=None)

    @property
    def moneyness(self) -> np.ndarray:
        return self.I0 / self.strikes

    def parity_residual(self) -> np.ndarray:
        disc = np.exp(-self.riskfree * (self.maturities - self.t))[:, None]
        return self.call - self.put - disc * (self.mean_terminal[:, None] - self.strikes[None, :])

    def rows(self):
        for i, T in enumerate(self.maturities):
            for j, K in enumerate(self.strikes):
                iv = np.nan if self.implied_vol is None else self.implied_vol[i, j]
                yield (int(T), float(K), self.I0 / K if K > 0 else np.inf, self.call[i, j], self.put[i, j],
                       self.call_se[i, j], self.put_se[i, j], iv)


GRID_COLUMNS = ("T", "K", "moneyness", "call", "put", "call_se", "put_se", "implied_vol")


def _price_one(draws: np.ndarray, strikes: np.ndarray, disc: float):
    n = draws.size
    call_pay = np.maximum(draws[:, None] - strikes[None, :], 0.0)
    put_pay = np.maximum(strikes[None, :] - draws[:, None], 0.0)
    se = (lambda pay: disc * pay.std(axis=0, ddof=1) / math.sqrt(n)) if n > 1 else (lambda pay: np.zeros(pay.shape[1]))
    return disc * call_pay.mean(axis=0), disc * put_pay.mean(axis=0), se(call_pay), se(put_pay)


def price_options(paths, strikes, T=None, t: int = 0, riskfree: float = 0.0, I0: float | None = None) -> OptionGrid:
    """Discounted Monte Carlo call/put prices.

    ``paths`` is one terminal-price ScenarioSet (with ``T`` given or taken
    from its provenance) or a ``{T: ScenarioSet}`` mapping.  Calls and puts
    share the path set, so put-call parity holds up to rounding.
    """
    if isinstance(paths, ScenarioSet):
        if T is None:
            T = paths.provenance.get("maturity")
            if T is None:
                raise ValidationError("maturity T is required")
        paths = {int(T): paths}
    strikes = np.asarray(strikes, dtype=float).ravel()
    if strikes.size == 0 or np.any(strikes < 0):
        raise ValidationError("strikes must be non-negative")
    mats = np.array(sorted(paths), dtype=int)
    if np.any(mats < t):
        raise ValidationError("maturities must not precede the valuation period")
    first = paths[int(mats[0])]
    if I0 is None:
        I0 = float(first.provenance.get("I0", np.nan))
    shape = (mats.size, strikes.size)
    call, put, cse, pse = (np.zeros(shape) for _ in range(4))
    means = np.zeros(mats.size)
    n = None
    for i, T_ in enumerate(mats):
        s = paths[int(T_)]
        if s.kind != "terminal-price" or len(s) == 0:
            raise ValidationError("price_options needs a nonempty terminal-price scenario set")
        n = len(s) if n is None else n
        disc = math.exp(-riskfree * (T_ - t))
        call[i], put[i], cse[i], pse[i] = _price_one(s.draws, strikes, disc)
        means[i] = s.draws.mean()
    grid = OptionGrid(mats, strikes, float(I0), riskfree, t, call, put, cse, pse, means, int(n))
    grid.implied_vol = implied_vol(grid)
    return grid


def implied_vol(grid: OptionGrid) -> np.ndarray:
    """Implied volatility per (maturity, strike); NaN where the price leaves the no-arbitrage band."""
    if not grid.I0 > 0:
        return np.full(grid.call.shape, np.nan)
    tau = (grid.maturities - grid.t).astype(float)[:, None]
    K = grid.strikes[None, :]
    return implied_vol_bs(grid.call, grid.I0, K, tau, grid.riskfree)
