"""Zero-mean ARMA(1,1)-GARCH(1,1) estimation, filtering and scenario generation.

Model (``e`` is the ARMA residual, ``eps`` the standardized innovation)::

    r_t = ar * r_{t-1} + ma * e_{t-1} + e_t,     e_t = sqrt(h_t) * eps_t
    h_t = omega + a * h_{t-1} + b * e_{t-1}**2

Filtering starts from r_0 = e_0 = 0 and h_1 = omega / (1 - a - b).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, signal, special, stats

from . import rng as rngmod
from .errors import FitError, NumericalError, ValidationError
from .ghdist import GHParams, fit_univariate, gof
from .ghdist import sample as gh_sample
from .ghdist.gof import GofReport
from .tails import tail_count, var_es

log = logging.getLogger(__name__)

BURN_IN = 500
_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class GarchModel:
    ar: float
    ma: float
    omega: float
    a: float
    b: float
    lambda0: float = 0.0
    riskfree: float = 0.0
    innovation: GHParams | None = None  # None means standard normal
    loglik: float = math.nan
    n_obs: int = 0
    last_h: float = math.nan  # filtered h_T of the estimation sample
    last_e: float = 0.0  # residual e_T of the estimation sample
    boundary: bool = False  # a + b pressed against the stationarity bound

    def __post_init__(self):
        if not self.omega > 0:
            raise ValidationError(f"omega must be > 0, got {self.omega}")
        if self.a < 0 or self.b < 0:
            raise ValidationError("GARCH coefficients a, b must be >= 0")
        if abs(self.ar) >= 1:
            raise ValidationError(f"|ar| must be < 1, got {self.ar}")

    @property
    def persistence(self) -> float:
        return self.a + self.b

    @property
    def stationary(self) -> bool:
        return self.persistence < 1

    @property
    def unconditional_variance(self) -> float:
        if not self.stationary:
            return math.inf
        return self.omega / (1 - self.persistence)

    def forecast_h(self) -> float:
        """One-step variance forecast from the last filtered state."""
        if not math.isfinite(self.last_h):
            return self.unconditional_variance
        return self.omega + self.a * self.last_h + self.b * self.last_e ** 2

    def to_dict(self) -> dict:
        d = {
            "ar": self.ar,
            "ma": self.ma,
            "omega": self.omega,
            "a": self.a,
            "b": self.b,
            "lambda0": self.lambda0,
            "riskfree": self.riskfree,
            "loglik": self.loglik,
            "n_obs": self.n_obs,
            "last_h": self.last_h,
            "last_e": self.last_e,
            "boundary": self.boundary,
            "innovation": "normal" if self.innovation is None else self.innovation.variant,
        }
        if self.innovation is not None:
            d.update({f"innovation.{k}": v for k, v in self.innovation.to_dict().items() if k != "variant"})
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GarchModel":
        try:
            kind = str(d.get("innovation", "normal"))
            innov = None
            if kind.lower() != "normal":
                sub = {k.split(".", 1)[1]: v for k, v in d.items() if k.startswith("innovation.")}
                sub["variant"] = kind
                innov = GHParams.from_dict(sub)
            return cls(
                ar=float(d["ar"]),
                ma=float(d["ma"]),
                omega=float(d["omega"]),
                a=float(d["a"]),
                b=float(d["b"]),
                lambda0=float(d.get("lambda0", 0.0)),
                riskfree=float(d.get("riskfree", 0.0)),
                innovation=innov,
                loglik=float(d.get("loglik", "nan")),
                n_obs=int(float(d.get("n_obs", 0))),
                last_h=float(d.get("last_h", "nan")),
                last_e=float(d.get("last_e", 0.0)),
                boundary=str(d.get("boundary", "false")).lower() == "true",
            )
        except KeyError as exc:
            raise ValidationError(f"model file lacks key {exc.args[0]!r}") from None


@dataclass(frozen=True)
class ScenarioSet:
    draws: np.ndarray
    seed: int | None
    provenance: dict = field(default_factory=dict)
    kind: str = "return"

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float).ravel()
        object.__setattr__(self, "draws", draws)
        if self.kind not in ("innovation", "return", "terminal-price"):
            raise ValidationError(f"unknown scenario kind {self.kind!r}")
        if not np.all(np.isfinite(draws)):
            raise NumericalError("scenario draws contain non-finite values")

    def __len__(self):
        return self.draws.size


def _series_values(series) -> np.ndarray:
    # An IndexSeries carries a zeroed base year that is not an observation.
    if hasattr(series, "active"):
        return np.asarray(series.active(), dtype=float)
    return np.asarray(series, dtype=float).ravel()


def arma_residuals(r: np.ndarray, ar: float, ma: float) -> np.ndarray:
    """e_t = r_t - ar r_{t-1} - ma e_{t-1} with zero pre-sample values."""
    return signal.lfilter([1.0, -ar], [1.0, ma], r)


def garch_filter(e: np.ndarray, omega: float, a: float, b: float, h1: float | None = None) -> np.ndarray:
    """Conditional variances h_1..h_n for residuals e_1..e_n."""
    if h1 is None:
        h1 = omega / (1 - a - b)
    drive = np.empty_like(e)
    drive[0] = h1
    drive[1:] = omega + b * e[:-1] ** 2
    # h_t = a h_{t-1} + drive_t with h_0 = 0 gives h_1 = drive_1 = h1.
    return signal.lfilter([1.0], [1.0, -a], drive)


def _unpack(theta):
    omega = math.exp(theta[0])
    pers = special.expit(theta[1])
    share = special.expit(theta[2])
    return math.tanh(theta[3]), math.tanh(theta[4]), omega, float(pers * share), float(pers * (1 - share))


def _pack(ar, ma, omega, a, b):
    pers = a + b
    return np.array([math.log(omega), special.logit(pers), special.logit(a / pers), math.atanh(ar), math.atanh(ma)])


def gaussian_qll(r: np.ndarray, ar, ma, omega, a, b) -> float:
    e = arma_residuals(r, ar, ma)
    h = garch_filter(e, omega, a, b)
    return float(-0.5 * np.sum(_LOG_2PI + np.log(h) + e ** 2 / h))


def fit_garch(series, *, lambda0: float = 0.0, riskfree: float = 0.0, n_restarts: int = 5, seed: int = 0) -> GarchModel:
    """Gaussian QMLE of the zero-mean ARMA(1,1)-GARCH(1,1).

    ``series`` is an IndexSeries (its zeroed base year is skipped) or a plain
    sequence of returns.  The innovation law is left as normal; see
    :func:`fit_innovation_law` for the second stage.
    """
    r = _series_values(series)
    if r.size < 20:
        raise ValidationError(f"need at least 20 observations, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise ValidationError("series contains non-finite values")
    v = float(np.mean(r ** 2))
    if not v > 0 or np.ptp(r) == 0:
        raise ValidationError("series has zero variance")

    def nll(theta):
        ar, ma, omega, a, b = _unpack(theta)
        val = -gaussian_qll(r, ar, ma, omega, a, b)
        return val if math.isfinite(val) else 1e100

    starts = [
        _pack(0.0, 0.0, v * 0.05, 0.85, 0.10),
        _pack(0.0, 0.0, v * 0.5, 0.3, 0.2),
        _pack(0.1, -0.1, v * 0.9, 0.05, 0.05),
    ]
    best = None
    for theta0 in starts:
        res = optimize.minimize(nll, theta0, method="L-BFGS-B", options=dict(maxiter=2000, ftol=1e-13, gtol=1e-8))
        if best is None or res.fun < best.fun:
            best = res
    gen = np.random.default_rng(seed)
    tries = 0
    while not (best.success and best.fun < 1e99) and tries < n_restarts:
        tries += 1
        res = optimize.minimize(nll, best.x + gen.normal(scale=0.5, size=5), method="L-BFGS-B")
        if res.fun <= best.fun:
            best = res
    if not best.fun < 1e99:
        raise FitError("ARMA-GARCH fit did not converge", best=_unpack(best.x), loglik=-best.fun)
    ar, ma, omega, a, b = _unpack(best.x)
    boundary = a + b > 1 - 1e-4
    if boundary:
        log.warning("GARCH persistence a + b = %.6f is at the stationarity bound", a + b)
    e = arma_residuals(r, ar, ma)
    h = garch_filter(e, omega, a, b)
    return GarchModel(
        ar, ma, omega, a, b, lambda0, riskfree, None, -float(best.fun), int(r.size), float(h[-1]), float(e[-1]), boundary
    )


def filter_series(model: GarchModel, series) -> tuple[np.ndarray, np.ndarray]:
    """ARMA residuals and conditional variances for ``series``."""
    r = _series_values(series)
    e = arma_residuals(r, model.ar, model.ma)
    h1 = model.unconditional_variance if model.stationary else model.omega
    return e, garch_filter(e, model.omega, model.a, model.b, h1)


def innovations(model: GarchModel, series) -> ScenarioSet:
    """Standardized residuals e_t / sqrt(h_t)."""
    e, h = filter_series(model, series)
    return ScenarioSet(e / np.sqrt(h), None, {"source": "garch filter", "n": e.size}, "innovation")


def fit_innovation_law(
    model: GarchModel, series, variant: str = "VG", *, seed: int = 0
) -> tuple[GarchModel, float, GofReport]:
    """Second estimation stage: fit a GH-family law to the standardized residuals.

    Returns the model carrying the fitted law, the attained log-likelihood,
    and the goodness-of-fit report.
    """
    eps = innovations(model, series).draws
    params, ll = fit_univariate(eps, variant, seed=seed)
    return replace(model, innovation=params), ll, gof(eps, params)


def fit_joint(
    series, variant: str = "VG", *, lambda0: float = 0.0, riskfree: float = 0.0, seed: int = 0
) -> tuple[GarchModel, GofReport]:
    """One-stage MLE of the ARMA-GARCH coefficients and the innovation law together.

    Starts from the two-stage estimate; the objective is the exact likelihood
    sum_t [log f(e_t / sqrt(h_t)) - log(h_t) / 2].
    """
    from .ghdist.univariate import _bounds as gh_bounds
    from .ghdist.univariate import _pack as gh_pack
    from .ghdist.univariate import _unpack as gh_unpack
    from .ghdist._optim import PENALTY, minimize_multistart
    from .ghdist import logpdf

    variant = variant.upper()
    r = _series_values(series)
    stage1 = fit_garch(r, lambda0=lambda0, riskfree=riskfree, seed=seed)
    stage2, _, _ = fit_innovation_law(stage1, r, variant, seed=seed)
    p0 = stage2.innovation

    def split(theta):
        ar, ma, omega, a, b = _unpack(theta[:5])
        return ar, ma, omega, a, b, GHParams(*gh_unpack(theta[5:], variant, None), variant)

    def nll(theta):
        try:
            ar, ma, omega, a, b, p = split(theta)
        except (ValidationError, OverflowError, ValueError):
            return PENALTY
        e = arma_residuals(r, ar, ma)
        h = garch_filter(e, omega, a, b)
        val = -float(np.sum(logpdf(p, e / np.sqrt(h)) - 0.5 * np.log(h)))
        return val if math.isfinite(val) else PENALTY

    start = np.concatenate([
        _pack(stage1.ar, stage1.ma, stage1.omega, max(stage1.a, 1e-8), max(stage1.b, 1e-8)),
        gh_pack(p0.lam, p0.alpha, p0.beta, p0.delta, p0.mu, variant, None),
    ])
    # keep the GARCH transforms away from saturation; the GH box is the one used by fit_univariate
    box = [(-30.0, 5.0), (-12.0, 12.0), (-12.0, 12.0), (-3.0, 3.0), (-3.0, 3.0)] + gh_bounds(variant, None)
    best = minimize_multistart(nll, [start], bounds=box, seed=seed, label=f"joint {variant} fit")
    ar, ma, omega, a, b, p = split(best.x)
    # The likelihood only pins down h_t * E[eps^2]; rescale so that E[eps^2] = 1,
    # which makes h_t the conditional second moment of e_t as in the two-stage fit.
    k = p.var() + p.mean() ** 2
    sk = math.sqrt(k)
    omega, b = omega * k, b * k
    p = GHParams(p.lam, p.alpha * sk, p.beta * sk, p.delta / sk, p.mu / sk, variant)
    e = arma_residuals(r, ar, ma)
    h = garch_filter(e, omega, a, b) if a + b < 1 else garch_filter(e, omega, a, b, omega)
    boundary = a + b > 1 - 1e-4
    if boundary:
        log.warning("joint fit: GARCH persistence a + b = %.6f is at or beyond the stationarity bound", a + b)
    model = GarchModel(
        ar, ma, omega, a, b, lambda0, riskfree, p, -float(best.fun), int(r.size), float(h[-1]), float(e[-1]), boundary
    )
    return model, gof(e / np.sqrt(h), p)


def _draw_innovations(model: GarchModel, size, gen: np.random.Generator) -> np.ndarray:
    n = int(np.prod(size))
    if model.innovation is None:
        out = gen.standard_normal(n)
    else:
        out = gh_sample(model.innovation, n, gen)
    return out.reshape(size)


def simulate_stationary(
    model: GarchModel, n: int, seed: int, *, burn_in: int = BURN_IN, workers: int = 1
) -> ScenarioSet:
    """``n`` draws from the stationary law of r_t.

    Each draw is the final value of an independent path run for ``burn_in``
    periods from the unconditional state.  Paths are generated in fixed
    blocks with per-block seeds, so the output does not depend on ``workers``.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if seed is None:
        raise ValidationError("simulate_stationary requires an explicit seed")
    if not model.stationary:
        raise ValidationError(f"a + b = {model.persistence:.6g} >= 1: the model has no stationary law")

    def block(k, lo, hi):
        gen = rngmod.stream(seed, "simulate_stationary", k)
        m = hi - lo
        eps = _draw_innovations(model, (burn_in + 1, m), gen)
        h = np.full(m, model.unconditional_variance)
        r_prev = np.zeros(m)
        e_prev = np.zeros(m)
        for t in range(burn_in + 1):
            if t:
                h = model.omega + model.a * h + model.b * e_prev ** 2
            e = np.sqrt(h) * eps[t]
            r_prev = model.ar * r_prev + model.ma * e_prev + e
            e_prev = e
        return r_prev

    draws = np.concatenate(rngmod.run_blocks(block, n, workers))
    prov = {
        "method": f"independent paths, burn-in {burn_in}, final value",
        "innovation": "normal" if model.innovation is None else model.innovation.variant,
        "block_size": rngmod.BLOCK_SIZE,
    }
    return ScenarioSet(draws, seed, prov, "return")


@dataclass(frozen=True)
class RiskSummary:
    minimum: float
    maximum: float
    mean: float
    median: float
    skewness: float
    excess_kurtosis: float
    var: dict
    es: dict
    n: int

    def rows(self):
        yield ("Min", self.minimum)
        yield ("Max", self.maximum)
        yield ("Mean", self.mean)
        yield ("Median", self.median)
        yield ("Skewness", self.skewness)
        yield ("Excess kurtosis", self.excess_kurtosis)
        for q in sorted(self.var):
            yield (f"VaR {q:g}", self.var[q])
        for q in sorted(self.es):
            yield (f"ES {q:g}", self.es[q])


def risk_summary(s, levels=(0.01, 0.05, 0.10)) -> RiskSummary:
    """Summary statistics and left-tail VaR/ES of a scenario set (or array)."""
    x = s.draws if isinstance(s, ScenarioSet) else np.asarray(s, dtype=float).ravel()
    levels = [float(q) for q in levels]
    if not levels:
        raise ValidationError("no levels requested")
    for q in levels:
        tail_count(x.size, q)  # validates q
    if x.size < 1 / min(levels) - 1e-9:
        raise ValidationError(f"{x.size} draws are too few for level {min(levels)}; need at least {math.ceil(1 / min(levels))}")
    var, es = {}, {}
    for q in levels:
        var[q], es[q] = var_es(x, q)
    return RiskSummary(
        float(x.min()),
        float(x.max()),
        float(x.mean()),
        float(np.median(x)),
        float(stats.skew(x)),
        float(stats.kurtosis(x)),
        var,
        es,
        int(x.size),
    )


def ljung_box(series, lags: int) -> tuple[float, float]:
    """Ljung-Box Q statistic over lags 1..``lags`` and its chi-square p-value."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if lags < 1 or lags >= n / 2:
        raise ValidationError(f"need 1 <= lags < n/2, got lags={lags}, n={n}")
    y = x - x.mean()
    denom = float(np.dot(y, y))
    if denom == 0:
        raise ValidationError("constant series")
    k = np.arange(1, lags + 1)
    rho = np.array([np.dot(y[j:], y[:-j]) for j in k]) / denom
    q = float(n * (n + 2) * np.sum(rho ** 2 / (n - k)))
    return q, float(stats.chi2.sf(q, lags))
