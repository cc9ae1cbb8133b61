"""Univariate GH law: density, MGF, sampling, numeric CDF and ML fitting."""
from __future__ import annotations

import functools
import logging
import math

import numpy as np
from scipy import special, stats
from scipy.optimize import elementwise

from ..errors import DomainError, FitError, ParameterError, ValidationError
from ..rng import as_generator
from ._optim import PENALTY, minimize_multistart
from .gig import log_kv, log_kv_table, sample_gig
from .params import GHParams

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
_FAST_MIN = 5000


def logpdf(p: GHParams, x, fast: bool = False):
    """Log-density; ``fast`` swaps in the tabulated Bessel function."""
    kv = log_kv_table if fast else log_kv
    x = np.asarray(x, dtype=float)
    y = x - p.mu
    gam = p.gamma
    nu = p.lam - 0.5
    if p.delta > 0:
        q = np.sqrt(p.delta ** 2 + y ** 2)
        out = (
            p.lam * math.log(gam / p.delta)
            - 0.5 * _LOG_2PI
            - log_kv(p.lam, p.delta * gam)
            + kv(nu, p.alpha * q)
            + nu * np.log(q / p.alpha)
            + p.beta * y
        )
        return out if np.ndim(out) else float(out)

    # delta -> 0 limit (variance gamma)
    ay = np.abs(y)
    const = 2 * p.lam * math.log(gam) - 0.5 * math.log(math.pi) - special.gammaln(p.lam) - nu * math.log(2 * p.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        body = nu * np.log(ay) + kv(nu, p.alpha * ay)
    if nu > 0:
        # |y|^nu K_nu(alpha |y|) -> Gamma(nu) 2^(nu-1) alpha^-nu
        at_zero = special.gammaln(nu) + (nu - 1) * math.log(2.0) - nu * math.log(p.alpha)
    else:
        at_zero = math.inf
    body = np.where(ay == 0, at_zero, body)
    out = const + body + p.beta * y
    return out if np.ndim(out) else float(out)


def density(p: GHParams, x):
    """GH density at ``x`` (scalar or array)."""
    out = np.exp(logpdf(p, x))
    return out if np.ndim(out) else float(out)


def convergence_strip(p: GHParams) -> tuple[float, float]:
    """Open interval of ``u`` on which the MGF is finite."""
    return -p.alpha - p.beta, p.alpha - p.beta


def log_mgf(p: GHParams, u):
    """log E[exp(u X)]; raises DomainError outside |beta + u| < alpha."""
    u = np.asarray(u, dtype=float)
    bu = p.beta + u
    if np.any(np.abs(bu) >= p.alpha):
        lo, hi = convergence_strip(p)
        raise DomainError(f"MGF undefined: u must lie in ({lo:.6g}, {hi:.6g})")
    g2 = p.alpha ** 2 - p.beta ** 2
    gu2 = p.alpha ** 2 - bu ** 2
    if p.delta > 0:
        out = (
            p.mu * u
            + 0.5 * p.lam * np.log(g2 / gu2)
            + log_kv(p.lam, p.delta * np.sqrt(gu2))
            - log_kv(p.lam, p.delta * math.sqrt(g2))
        )
    else:
        out = p.mu * u + p.lam * np.log(g2 / gu2)
    return out if np.ndim(out) else float(out)


def mgf(p: GHParams, u):
    out = np.exp(log_mgf(p, u))
    return out if np.ndim(out) else float(out)


def sample(p: GHParams, n: int, seed) -> np.ndarray:
    """``n`` iid draws via the normal mean-variance mixture."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = as_generator(seed)
    w = sample_gig(p.lam, p.chi, p.psi, n, rng)
    z = rng.standard_normal(n)
    return p.mu + p.beta * w + np.sqrt(w) * z


def sample_tilted(p: GHParams, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per entry of ``beta`` from GH(lam, alpha, beta_i, delta, mu)."""
    beta = np.asarray(beta, dtype=float)
    psi = p.alpha ** 2 - beta ** 2
    if np.any(psi <= 0):
        raise ParameterError("tilted skewness leaves the admissible region |beta| < alpha")
    w = sample_gig(p.lam, p.chi, psi, beta.size, rng)
    z = rng.standard_normal(beta.size)
    return p.mu + beta * w + np.sqrt(w) * z


# -- numeric CDF -------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class _CdfTable:
    def __init__(self, p: GHParams):
        self.p = p
        sd = math.sqrt(p.var())
        half = 40.0 * max(sd, 1.0 / (p.alpha - abs(p.beta)))
        offsets = np.geomspace(1e-10 * sd, half, 600)
        left = p.mu - offsets[::-1]
        right = p.mu + offsets
        nodes = np.concatenate([left, [p.mu], right])
        a, b = nodes[:-1], nodes[1:]
        mid, rad = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[:, None] + rad[:, None] * _GL_X[None, :]
        seg = (density(p, pts) * _GL_W[None, :]).sum(axis=1) * rad
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.total = float(cum[-1])
        self.nodes = nodes
        self.values = cum / self.total

    def cdf(self, x):
        """Tabulated mass up to the node left of ``x`` plus quadrature over the remainder."""
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        inside = (flat > self.nodes[0]) & (flat < self.nodes[-1])
        out = np.where(flat >= self.nodes[-1], 1.0, 0.0)
        xi = flat[inside]
        idx = np.searchsorted(self.nodes, xi, side="right") - 1
        a = self.nodes[idx]
        mid, rad = 0.5 * (a + xi), 0.5 * (xi - a)
        pts = mid[:, None] + rad[:, None] * _GL_X[None, :]
        part = (density(self.p, pts) * _GL_W[None, :]).sum(axis=1) * rad
        out[inside] = self.values[idx] + part / self.total
        return np.clip(out, 0.0, 1.0).reshape(x.shape)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        idx = np.clip(np.searchsorted(self.values, q), 1, len(self.nodes) - 1)
        lo, hi = self.nodes[idx - 1], self.nodes[idx]
        res = elementwise.find_root(
            lambda x, qq: self.cdf(x) - qq, (lo, hi), args=(q,), tolerances=dict(xatol=0.0, xrtol=4 * np.finfo(float).eps)
        )
        return res.x


@functools.lru_cache(maxsize=64)
def _table(p: GHParams) -> _CdfTable:
    return _CdfTable(p)


def cdf(p: GHParams, x):
    """Distribution function by Gauss-Legendre quadrature of the density over a cached node grid."""
    out = _table(p).cdf(x)
    return out if np.ndim(out) else float(out)


def ppf(p: GHParams, q):
    """Quantile function, inverse of :func:`cdf`."""
    out = _table(p).ppf(q)
    return out if np.ndim(out) else float(out)


# -- fitting -----------------------------------------------------------------


def _unpack(theta, variant, fixed_mu):
    """Map unconstrained coordinates to (lam, alpha, beta, delta, mu)."""
    theta = list(theta)
    if variant == "GH":
        lam = theta.pop(0)
    elif variant == "VG":
        lam = math.exp(theta.pop(0))
    else:
        lam = -0.5
    beta = theta.pop(0)
    alpha = abs(beta) + math.exp(theta.pop(0))
    delta = 0.0 if variant == "VG" else math.exp(theta.pop(0))
    mu = fixed_mu if fixed_mu is not None else theta.pop(0)
    return lam, alpha, beta, delta, mu


def _pack(lam, alpha, beta, delta, mu, variant, fixed_mu):
    theta = []
    if variant == "GH":
        theta.append(lam)
    elif variant == "VG":
        theta.append(math.log(lam))
    theta.append(beta)
    theta.append(math.log(max(alpha - abs(beta), 1e-8)))
    if variant != "VG":
        theta.append(math.log(delta))
    if fixed_mu is None:
        theta.append(mu)
    return np.array(theta)


def _bounds(variant, fixed_mu):
    """Search box for standardized data (unit standard deviation)."""
    b = []
    if variant == "GH":
        b.append((-30.0, 30.0))
    elif variant == "VG":
        b.append((math.log(0.05), math.log(100.0)))
    b.append((-30.0, 30.0))  # beta
    b.append((math.log(1e-4), math.log(200.0)))  # log(alpha - |beta|)
    if variant != "VG":
        b.append((math.log(1e-6), math.log(200.0)))  # log delta
    if fixed_mu is None:
        b.append((-20.0, 20.0))
    return b


def _moment_starts(z: np.ndarray, variant: str, fixed_mu):
    """Moment-matched starting points for standardized data (mean ~ 0, sd ~ 1)."""
    m = float(np.mean(z)) if fixed_mu is None else fixed_mu
    v = float(np.var(z))
    k = max(float(stats.kurtosis(z)), 0.2)
    sk = float(stats.skew(z))
    beta = float(np.clip(0.3 * sk, -0.5, 0.5))
    starts = []
    if variant in ("VG", "GH"):
        lam = float(np.clip(3.0 / k, 0.2, 20.0))
        alpha = math.sqrt(2 * lam / v + beta ** 2)
        starts.append((lam, alpha, beta, 0.0 if variant == "VG" else 0.1 * math.sqrt(v), m))
    if variant in ("NIG", "GH"):
        delta = math.sqrt(3 * v / k)
        alpha = math.sqrt(3 / (k * v) + beta ** 2)
        starts.append((-0.5, alpha, beta, delta, m))
    return starts


def fit_univariate(data, variant: str = "GH", *, mu=None, n_restarts: int = 5, seed: int = 0):
    """Maximum-likelihood GH/VG/NIG fit.

    Parameters
    ----------
    data : array_like
        Sample, at least 10 points.
    variant : {"GH", "VG", "NIG"}
    mu : float, optional
        Hold the location fixed at this value.
    n_restarts : int
        Perturbed restarts tried when the optimizer does not converge.

    Returns
    -------
    (GHParams, float)
        Estimate and attained log-likelihood.
    """
    x = np.asarray(data, dtype=float).ravel()
    variant = variant.upper()
    if x.size < 10:
        raise ValidationError("need at least 10 observations")
    if not np.all(np.isfinite(x)):
        raise ValidationError("data contain non-finite values")
    # fit on standardized data, then map back by location-scale equivariance
    loc = 0.0 if mu is not None else float(np.median(x))
    scale = float(np.std(x))
    if scale <= 0:
        raise ValidationError("data have zero variance")
    z = (x - loc) / scale
    zmu = None if mu is None else (mu - loc) / scale

    # the tabulated Bessel function only pays off on large samples
    fast = z.size > _FAST_MIN

    def nll(theta):
        try:
            lam, alpha, beta, delta, m = _unpack(theta, variant, zmu)
            params = GHParams(lam, alpha, beta, delta, m, variant)
            val = -float(np.sum(logpdf(params, z, fast=fast)))
        except (ParameterError, OverflowError, ValueError):
            return PENALTY
        return val if math.isfinite(val) else PENALTY

    starts = [_pack(*s0, variant, zmu) for s0 in _moment_starts(z, variant, zmu)]
    try:
        best = minimize_multistart(
            nll,
            starts,
            bounds=_bounds(variant, zmu),
            n_restarts=n_restarts,
            seed=seed,
            label=f"{variant} fit",
        )
    except FitError as exc:
        if exc.best is not None:
            try:
                lam, alpha, beta, delta, m = _unpack(exc.best, variant, zmu)
                exc.best = GHParams(lam, alpha / scale, beta / scale, delta * scale, m * scale + loc, variant)
            except (ParameterError, OverflowError, ValueError):
                exc.best = None
        raise

    lam, alpha, beta, delta, m = _unpack(best.x, variant, zmu)
    params = GHParams(lam, alpha / scale, beta / scale, delta * scale, m * scale + loc, variant)
    if mu is not None:
        params = GHParams(params.lam, params.alpha, params.beta, params.delta, float(mu), variant)
    return params, loglik(params, x)


def loglik(p: GHParams, data) -> float:
    return float(np.sum(logpdf(p, np.asarray(data, dtype=float))))
