"""Bessel helpers and the Generalized Inverse Gaussian mixing law.

GIG(lam, chi, psi) has density proportional to
w**(lam - 1) * exp(-(chi / w + psi * w) / 2) on w > 0.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from ..errors import ValidationError


def log_kv(nu, z):
    """log K_nu(z) for z > 0, stable for large z and for small z with large |nu|."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.log(special.kve(nu, z)) - z
    bad = ~np.isfinite(out) & (z > 0)
    if np.any(bad):
        # small-argument limit K_nu(z) ~ Gamma(|nu|) 2^(|nu|-1) z^-|nu|
        a = np.abs(np.broadcast_to(nu, out.shape)[bad])
        zb = np.broadcast_to(z, out.shape)[bad]
        out = np.array(out, copy=True)
        out[bad] = special.gammaln(a) + (a - 1) * math.log(2.0) - a * np.log(zb)
    return out if out.ndim else float(out)


def gig_moment(lam: float, chi: float, psi: float, k: int = 1) -> float:
    """Raw moment E[W**k] of GIG(lam, chi, psi)."""
    if chi == 0:
        return math.exp(special.gammaln(lam + k) - special.gammaln(lam) + k * math.log(2.0 / psi))
    if psi == 0:
        if -lam <= k:
            return math.inf
        return math.exp(special.gammaln(-lam - k) - special.gammaln(-lam) + k * math.log(chi / 2.0))
    omega = math.sqrt(chi * psi)
    return math.exp(0.5 * k * math.log(chi / psi) + log_kv(lam + k, omega) - log_kv(lam, omega))


def _psi_fn(x, alpha, lam):
    return -alpha * (np.cosh(x) - 1.0) - lam * (np.exp(x) - x - 1.0)


def _dpsi_fn(x, alpha, lam):
    return -alpha * np.sinh(x) - lam * (np.exp(x) - 1.0)


def _devroye(lam: float, omega: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draws from the two-parameter GIG(lam, omega, omega) for lam >= 0, omega > 0.

    Devroye (2014) rejection sampler; expected iterations are bounded
    uniformly in the parameters.
    """
    omega = np.asarray(omega, dtype=float)
    alpha = np.sqrt(omega ** 2 + lam ** 2) - lam
    one = np.ones_like(alpha)

    x = -_psi_fn(one, alpha, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(
            (x >= 0.5) & (x <= 2.0),
            1.0,
            np.where(x > 2.0, np.sqrt(2.0 / (alpha + lam)), np.log(4.0 / (alpha + 2.0 * lam))),
        )
        x = -_psi_fn(-one, alpha, lam)
        s_big = np.sqrt(4.0 / (alpha * math.cosh(1.0) + lam))
        s_log = np.log1p(1.0 / alpha + np.sqrt(1.0 / alpha ** 2 + 2.0 / alpha))
        s_small = np.where(lam == 0, s_log, np.minimum(1.0 / lam if lam > 0 else np.inf, s_log))
        s = np.where((x >= 0.5) & (x <= 2.0), 1.0, np.where(x > 2.0, s_big, s_small))

    eta = -_psi_fn(t, alpha, lam)
    zeta = -_dpsi_fn(t, alpha, lam)
    theta = -_psi_fn(-s, alpha, lam)
    xi = _dpsi_fn(-s, alpha, lam)
    p = 1.0 / xi
    r = 1.0 / zeta
    td = t - r * eta
    sd = s - p * theta
    q = td + sd

    out = np.empty_like(alpha)
    pending = np.arange(alpha.size)
    while pending.size:
        m = pending.size
        u = rng.random(m)
        v = rng.random(m)
        w = rng.random(m)
        qq, pp, rr = q[pending], p[pending], r[pending]
        sdd, tdd = sd[pending], td[pending]
        tot = pp + qq + rr
        with np.errstate(divide="ignore"):
            cand = np.where(
                u < qq / tot,
                -sdd + qq * v,
                np.where(u < (qq + rr) / tot, tdd - rr * np.log(v), -sdd + pp * np.log(v)),
            )
        tt, ss = t[pending], s[pending]
        f1 = np.exp(-eta[pending] - zeta[pending] * (cand - tt))
        f2 = np.exp(-theta[pending] + xi[pending] * (cand + ss))
        g = np.where(cand > tdd, f1, np.where(cand < -sdd, f2, 1.0))
        with np.errstate(over="ignore", invalid="ignore"):
            accept = w * g <= np.exp(_psi_fn(cand, alpha[pending], lam))
        out[pending[accept]] = cand[accept]
        pending = pending[~accept]

    om = omega
    return np.exp(out) * (lam / om + np.sqrt(1.0 + (lam / om) ** 2))


def sample_gig(lam: float, chi, psi, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` draws from GIG(lam, chi, psi); ``chi`` and ``psi`` broadcast to ``size``."""
    chi = np.broadcast_to(np.asarray(chi, dtype=float), (size,))
    psi = np.broadcast_to(np.asarray(psi, dtype=float), (size,))
    if np.all(chi == 0):
        return rng.standard_gamma(lam, size) * (2.0 / psi)
    if np.all(psi == 0):
        return (chi / 2.0) / rng.standard_gamma(-lam, size)
    if np.any(chi <= 0) or np.any(psi <= 0):
        raise ValidationError("mixed degenerate GIG parameters are not supported")
    omega = np.sqrt(chi * psi)
    scale = np.sqrt(chi / psi)
    y = _devroye(abs(lam), omega, rng)
    if lam < 0:
        y = 1.0 / y
    return scale * y


# Fixed log-spaced grid for the fast path; fixed nodes keep the interpolation
# error a smooth function of nu, which matters for finite-difference gradients.
_GRID_S = np.arange(-30.0, 7.0 + 1e-9, 0.01)
_GRID_Z = np.exp(_GRID_S)


def log_kv_table(nu: float, z: np.ndarray) -> np.ndarray:
    """log K_nu(z) through a cubic spline in log z; ~1e-9 absolute accuracy.

    Intended for likelihood evaluation inside optimizers.  Points outside the
    tabulated range fall back to :func:`log_kv`.
    """
    from scipy.interpolate import CubicSpline

    z = np.asarray(z, dtype=float)
    node_vals = log_kv(nu, _GRID_Z) + _GRID_Z
    spline = CubicSpline(_GRID_S, node_vals)
    out = np.empty_like(z)
    inside = (z >= _GRID_Z[0]) & (z <= _GRID_Z[-1])
    with np.errstate(divide="ignore"):
        out[inside] = spline(np.log(z[inside])) - z[inside]
    if not np.all(inside):
        out[~inside] = log_kv(nu, z[~inside])
    return out
