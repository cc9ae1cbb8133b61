"""Bivariate GH law in the (lambda, chi, psi, mu, sigma, gamma) form."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from ..errors import FitError, ParameterError, ValidationError
from ..rng import as_generator
from ._optim import PENALTY, minimize_multistart
from .gig import log_kv, log_kv_table, sample_gig
from .params import BivariateGHParams
from .univariate import _FAST_MIN


def logpdf2(p: BivariateGHParams, x, fast: bool = False) -> np.ndarray:
    """Log-density at the rows of ``x`` (shape (n, 2))."""
    kv = log_kv_table if fast else log_kv
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sig = p.sigma_matrix
    inv = np.linalg.inv(sig)
    y = x - np.array(p.mu)
    g = np.array(p.gamma)
    q = np.einsum("ni,ij,nj->n", y, inv, y)
    gg = float(g @ inv @ g)
    a = p.chi + q
    b = p.psi + gg
    lam = p.lam
    if p.chi > 0 and p.psi > 0:
        norm = 0.5 * lam * (math.log(p.psi) - math.log(p.chi)) - log_kv(lam, math.sqrt(p.chi * p.psi))
    elif p.chi == 0:
        norm = lam * math.log(p.psi) - special.gammaln(lam) - (lam - 1) * math.log(2.0)
    else:
        norm = -lam * math.log(p.chi) - special.gammaln(-lam) - (-lam - 1) * math.log(2.0)
    norm += (1 - lam) * math.log(b) - math.log(2 * math.pi) - 0.5 * math.log(np.linalg.det(sig))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sqrt(a * b)
        out = norm + kv(lam - 1, s) - (1 - lam) * np.log(s) + y @ (inv @ g)
    out = np.where(s == 0, math.inf, out)
    return out


def sample2(p: BivariateGHParams, n: int, seed) -> np.ndarray:
    """``n`` joint draws, shape (n, 2)."""
    rng = as_generator(seed)
    w = sample_gig(p.lam, p.chi, p.psi, n, rng)
    chol = np.linalg.cholesky(p.sigma_matrix)
    z = rng.standard_normal((n, 2)) @ chol.T
    return np.array(p.mu) + w[:, None] * np.array(p.gamma) + np.sqrt(w)[:, None] * z


@dataclass(frozen=True)
class BivariateFit:
    params: BivariateGHParams
    loglik: float
    aic: float
    bic: float
    n_params: int


def _unpack(theta, variant):
    theta = list(theta)
    if variant == "GH":
        lam = theta.pop(0)
    elif variant == "VG":
        lam = math.exp(theta.pop(0))
    else:
        lam = -0.5
    chi = 0.0 if variant == "VG" else math.exp(theta.pop(0))
    psi = math.exp(theta.pop(0))
    mu = (theta.pop(0), theta.pop(0))
    l1, l21 = theta.pop(0), theta.pop(0)
    chol = np.array([[math.exp(l1), 0.0], [l21, math.exp(-l1)]])
    sigma = chol @ chol.T
    gamma = (theta.pop(0), theta.pop(0))
    return lam, chi, psi, mu, sigma, gamma


def _pack(lam, chi, psi, mu, sigma, gamma, variant):
    chol = np.linalg.cholesky(np.asarray(sigma) / math.sqrt(np.linalg.det(sigma)))
    theta = []
    if variant == "GH":
        theta.append(lam)
    elif variant == "VG":
        theta.append(math.log(lam))
    if variant != "VG":
        theta.append(math.log(chi))
    theta += [math.log(psi), mu[0], mu[1], math.log(chol[0, 0]), chol[1, 0], gamma[0], gamma[1]]
    return np.array(theta)


def _bounds(variant):
    """Search box for standardized data."""
    b = []
    if variant == "GH":
        b.append((-30.0, 30.0))
    elif variant == "VG":
        b.append((math.log(0.05), math.log(100.0)))
    if variant != "VG":
        b.append((-20.0, math.log(1e3)))  # log chi
    b.append((-20.0, math.log(1e3)))  # log psi
    b += [(-20.0, 20.0)] * 2  # mu
    b += [(-10.0, 10.0), (-50.0, 50.0)]  # Cholesky factor of sigma
    b += [(-30.0, 30.0)] * 2  # gamma
    return b


def _starts(z: np.ndarray, variant: str):
    mu = z.mean(axis=0)
    cov = np.cov(z, rowvar=False)
    ew = math.sqrt(np.linalg.det(cov))
    sigma = cov / ew
    k = max(float(np.mean(stats.kurtosis(z, axis=0))), 0.2)
    starts = []
    lams = {"VG": [float(np.clip(3.0 / k, 0.2, 20.0))], "NIG": [-0.5], "GH": [1.0, -0.5]}[variant]
    for lam in lams:
        if variant == "VG":
            chi, psi = 0.0, 2 * lam / ew
        else:
            omega = 1.0
            ratio = math.exp(log_kv(lam + 1, omega) - log_kv(lam, omega))
            chi, psi = ew / ratio * omega, omega * ratio / ew
        starts.append((lam, chi, psi, tuple(mu), sigma, (0.0, 0.0)))
    return starts


def fit_bivariate(data, variant: str = "GH", *, n_restarts: int = 5, seed: int = 0) -> BivariateFit:
    """Maximum-likelihood fit with the identification det(sigma) = 1.

    The optimizer works on standardized coordinates; the estimate is mapped
    back by the affine equivariance of the family.
    """
    x = np.asarray(data, dtype=float)
    variant = variant.upper()
    if x.ndim != 2 or x.shape[1] != 2:
        raise ValidationError("bivariate data must have shape (n, 2)")
    if x.shape[0] < 10:
        raise ValidationError("need at least 10 observations")
    if not np.all(np.isfinite(x)):
        raise ValidationError("data contain non-finite values")
    loc = x.mean(axis=0)
    sd = x.std(axis=0)
    if np.any(sd == 0):
        raise ValidationError("singular dispersion: a coordinate is constant")
    z = (x - loc) / sd
    corr = np.corrcoef(z, rowvar=False)
    if 1.0 - abs(corr[0, 1]) < 1e-10:
        raise ValidationError("singular dispersion: coordinates are perfectly collinear")

    fast = z.shape[0] > _FAST_MIN

    def nll(theta):
        try:
            lam, chi, psi, mu, sigma, gamma = _unpack(theta, variant)
            p = BivariateGHParams(lam, chi, psi, mu, sigma, gamma, variant)
            val = -float(np.sum(logpdf2(p, z, fast=fast)))
        except (ParameterError, OverflowError, ValueError, np.linalg.LinAlgError):
            return PENALTY
        return val if math.isfinite(val) else PENALTY

    starts = [_pack(*s0, variant) for s0 in _starts(z, variant)]
    d = np.diag(sd)

    def to_params(theta):
        lam, chi, psi, mu, sigma, gamma = _unpack(theta, variant)
        return BivariateGHParams(
            lam, chi, psi, d @ np.array(mu) + loc, d @ sigma @ d, d @ np.array(gamma), variant
        ).normalized()

    try:
        best = minimize_multistart(
            nll,
            starts,
            bounds=_bounds(variant),
            n_restarts=n_restarts,
            seed=seed,
            label=f"bivariate {variant} fit",
        )
    except FitError as exc:
        try:
            exc.best = None if exc.best is None else to_params(exc.best)
        except (ParameterError, OverflowError, ValueError, np.linalg.LinAlgError):
            exc.best = None
        raise
    params = to_params(best.x)
    ll = float(np.sum(logpdf2(params, x)))
    k = best.x.size
    n = x.shape[0]
    return BivariateFit(params, float(ll), 2 * k - 2 * ll, k * math.log(n) - 2 * ll, k)
