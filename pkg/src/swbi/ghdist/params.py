"""Parameter containers for the univariate and bivariate GH families.

Univariate laws use the (lambda, alpha, beta, delta, mu) form.  The same law
written as a normal mean-variance mixture

    X = mu + beta * W + sqrt(W) * Z,   W ~ GIG(lambda, chi, psi)

has ``chi = delta**2`` and ``psi = alpha**2 - beta**2``.  Bivariate laws use
(lambda, chi, psi, mu, sigma, gamma) with X = mu + W gamma + sqrt(W) A Z and
A A' = sigma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError

VARIANTS = ("GH", "VG", "NIG")


@dataclass(frozen=True)
class GHParams:
    lam: float
    alpha: float
    beta: float
    delta: float
    mu: float
    variant: str = "GH"

    def __post_init__(self):
        for name in ("lam", "alpha", "beta", "delta", "mu"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        variant = str(self.variant).upper()
        object.__setattr__(self, "variant", variant)
        if variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}")
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if self.alpha ** 2 - self.beta ** 2 <= 0:
            raise ParameterError(f"need alpha^2 - beta^2 > 0, got alpha={self.alpha}, beta={self.beta}")
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta}")
        if variant == "VG":
            if self.lam <= 0 or self.delta != 0:
                raise ParameterError("VG requires lambda > 0 and delta = 0")
        elif variant == "NIG":
            if self.lam != -0.5 or self.delta <= 0:
                raise ParameterError("NIG requires lambda = -1/2 and delta > 0")
        elif self.delta == 0 and self.lam <= 0:
            raise ParameterError("delta = 0 requires lambda > 0")

    @classmethod
    def vg(cls, lam, alpha, beta, mu=0.0):
        return cls(lam, alpha, beta, 0.0, mu, "VG")

    @classmethod
    def nig(cls, alpha, beta, delta, mu=0.0):
        return cls(-0.5, alpha, beta, delta, mu, "NIG")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.alpha ** 2 - self.beta ** 2)

    @property
    def chi(self) -> float:
        return self.delta ** 2

    @property
    def psi(self) -> float:
        return self.alpha ** 2 - self.beta ** 2

    def with_beta(self, beta: float) -> "GHParams":
        return GHParams(self.lam, self.alpha, beta, self.delta, self.mu, self.variant)

    def mean(self) -> float:
        from .gig import gig_moment

        return self.mu + self.beta * gig_moment(self.lam, self.chi, self.psi, 1)

    def var(self) -> float:
        from .gig import gig_moment

        m1 = gig_moment(self.lam, self.chi, self.psi, 1)
        m2 = gig_moment(self.lam, self.chi, self.psi, 2)
        return m1 + self.beta ** 2 * (m2 - m1 ** 2)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "lambda": self.lam,
            "alpha": self.alpha,
            "beta": self.beta,
            "delta": self.delta,
            "mu": self.mu,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GHParams":
        return cls(
            float(d["lambda"]),
            float(d["alpha"]),
            float(d["beta"]),
            float(d["delta"]),
            float(d["mu"]),
            str(d.get("variant", "GH")),
        )


@dataclass(frozen=True)
class BivariateGHParams:
    lam: float
    chi: float
    psi: float
    mu: tuple
    sigma: tuple
    gamma: tuple
    variant: str = "GH"

    def __post_init__(self):
        for name in ("lam", "chi", "psi"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "mu", tuple(float(v) for v in np.ravel(self.mu)))
        object.__setattr__(self, "gamma", tuple(float(v) for v in np.ravel(self.gamma)))
        sig = np.asarray(self.sigma, dtype=float).reshape(2, 2)
        object.__setattr__(self, "sigma", tuple(tuple(float(v) for v in row) for row in sig))
        object.__setattr__(self, "variant", str(self.variant).upper())
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}")
        if len(self.mu) != 2 or len(self.gamma) != 2:
            raise ParameterError("mu and gamma must be 2-vectors")
        if not np.allclose(sig, sig.T, rtol=0, atol=1e-12 * max(1.0, np.abs(sig).max())):
            raise ParameterError("sigma must be symmetric")
        if sig[0, 0] <= 0 or np.linalg.det(sig) <= 0:
            raise ParameterError("sigma must be positive definite")
        if self.chi < 0 or self.psi < 0 or (self.chi == 0 and self.psi == 0):
            raise ParameterError("need chi >= 0, psi >= 0, not both zero")
        if self.chi == 0 and self.lam <= 0:
            raise ParameterError("chi = 0 requires lambda > 0")
        if self.psi == 0 and self.lam >= 0:
            raise ParameterError("psi = 0 requires lambda < 0")
        if self.variant == "VG" and (self.chi != 0 or self.lam <= 0):
            raise ParameterError("VG requires chi = 0 and lambda > 0")
        if self.variant == "NIG" and self.lam != -0.5:
            raise ParameterError("NIG requires lambda = -1/2")

    @property
    def sigma_matrix(self) -> np.ndarray:
        return np.array(self.sigma)

    def mixing_moments(self) -> tuple[float, float]:
        from .gig import gig_moment

        m1 = gig_moment(self.lam, self.chi, self.psi, 1)
        m2 = gig_moment(self.lam, self.chi, self.psi, 2)
        return m1, m2 - m1 ** 2

    def mean(self) -> np.ndarray:
        m1, _ = self.mixing_moments()
        return np.array(self.mu) + m1 * np.array(self.gamma)

    def cov(self) -> np.ndarray:
        m1, v = self.mixing_moments()
        g = np.array(self.gamma)
        return m1 * self.sigma_matrix + v * np.outer(g, g)

    def corr(self) -> float:
        c = self.cov()
        return float(c[0, 1] / math.sqrt(c[0, 0] * c[1, 1]))

    def normalized(self) -> "BivariateGHParams":
        """Rescale the mixing variable so that det(sigma) = 1 (same law)."""
        k = math.sqrt(np.linalg.det(self.sigma_matrix))
        return BivariateGHParams(
            self.lam,
            self.chi * k,
            self.psi / k,
            self.mu,
            self.sigma_matrix / k,
            np.array(self.gamma) / k,
            self.variant,
        )

    def marginal(self, i: int) -> GHParams:
        """Univariate GH law of coordinate ``i``."""
        s2 = self.sigma[i][i]
        g = self.gamma[i]
        alpha = math.sqrt(self.psi / s2 + g ** 2 / s2 ** 2)
        beta = g / s2
        delta = math.sqrt(self.chi * s2)
        variant = self.variant
        return GHParams(self.lam, alpha, beta, delta, self.mu[i], variant)

    def to_dict(self) -> dict:
        s = self.sigma
        return {
            "variant": self.variant,
            "lambda": self.lam,
            "chi": self.chi,
            "psi": self.psi,
            "mu1": self.mu[0],
            "mu2": self.mu[1],
            "sigma11": s[0][0],
            "sigma12": s[0][1],
            "sigma22": s[1][1],
            "gamma1": self.gamma[0],
            "gamma2": self.gamma[1],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BivariateGHParams":
        s12 = float(d["sigma12"])
        return cls(
            float(d["lambda"]),
            float(d["chi"]),
            float(d["psi"]),
            (float(d["mu1"]), float(d["mu2"])),
            ((float(d["sigma11"]), s12), (s12, float(d["sigma22"]))),
            (float(d["gamma1"]), float(d["gamma2"])),
            str(d.get("variant", "GH")),
        )
