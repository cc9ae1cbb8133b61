"""Conditional tail measures of the index under a stressor: CoVaR, CoES, CoETL.

X is the stressor and Y the index.  With v_x the lower empirical q-quantile
of X and S = {j : x_j <= v_x}:

* CoVaR_q is the lower q-quantile of y over S;
* CoES_q is the mean of the y in S at or below CoVaR_q;
* CoETL_q is the mean of y over {x <= v_x and y <= v_y}, v_y the q-quantile of Y.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import NumericalError, ValidationError
from .ghdist import fit_bivariate, fit_univariate, sample, sample2
from .ghdist.bivariate import BivariateFit
from .tails import lower_quantile

log = logging.getLogger(__name__)


class EmptyTailError(NumericalError):
    pass


@dataclass(frozen=True)
class StressMeasures:
    covar: float
    coes: float
    coetl: float
    n_conditioning: int  # |{x <= v_x}|
    n_joint: int  # |{x <= v_x, y <= v_y}|


def _measures(x: np.ndarray, y: np.ndarray, q: float) -> StressMeasures:
    vx = lower_quantile(x, q)
    cond = x <= vx
    ys = y[cond]
    covar = lower_quantile(ys, q)
    coes = float(ys[ys <= covar].mean())
    vy = lower_quantile(y, q)
    joint = cond & (y <= vy)
    if not np.any(joint):
        raise EmptyTailError(
            f"no draw has both x <= VaR_q(X) and y <= VaR_q(Y) at q={q}; increase the number of draws"
        )
    return StressMeasures(covar, coes, float(y[joint].mean()), int(cond.sum()), int(joint.sum()))


def stress_measures(joint, q: float) -> StressMeasures:
    """CoVaR/CoES/CoETL from joint draws of shape (n, 2), columns (x, y)."""
    z = np.asarray(joint, dtype=float)
    if z.ndim != 2 or z.shape[1] != 2:
        raise ValidationError("joint draws must have shape (n, 2)")
    if z.shape[0] == 0:
        raise ValidationError("no draws")
    if z.shape[0] < 100 / q ** 2:
        log.warning("%d draws are below the recommended 100/q^2 = %d for q=%g", z.shape[0], math.ceil(100 / q ** 2), q)
    return _measures(z[:, 0], z[:, 1], q)


@dataclass
class StressReport:
    stressor: str
    levels: tuple
    measures: dict  # q -> StressMeasures
    se: dict  # q -> (covar_se, coes_se, coetl_se)
    n_draws: int
    seed: int
    correlation: float
    fit: BivariateFit | None = None
    n_observed: int = 0
    monotone: bool = field(default=True)

    def rows(self):
        for q in self.levels:
            m = self.measures[q]
            s = self.se.get(q, (math.nan,) * 3)
            yield (q, m.coes, m.covar, m.coetl, s[1], s[0], s[2], m.n_conditioning, m.n_joint)


REPORT_COLUMNS = ("level", "CoES", "CoVaR", "CoETL", "CoES_se", "CoVaR_se", "CoETL_se", "n_conditioning", "n_joint")


def _check_monotone(levels, measures) -> bool:
    qs = sorted(levels)
    ok = True
    for lo, hi in zip(qs, qs[1:]):
        a, b = measures[lo], measures[hi]
        ok &= a.covar <= b.covar and a.coes <= b.coes and a.coetl <= b.coetl
    return bool(ok)


def bootstrap_se(joint: np.ndarray, levels, n_boot: int, seed: int, step: str = "stress-bootstrap") -> dict:
    """Standard errors of the three measures from ``n_boot`` resamples of the draws."""
    gen = rngmod.stream(seed, step)
    n = joint.shape[0]
    acc = {q: [] for q in levels}
    for _ in range(n_boot):
        idx = gen.integers(0, n, n)
        xb, yb = joint[idx, 0], joint[idx, 1]
        for q in levels:
            try:
                m = _measures(xb, yb, q)
                acc[q].append((m.covar, m.coes, m.coetl))
            except EmptyTailError:
                pass
    out = {}
    for q, vals in acc.items():
        v = np.array(vals)
        out[q] = tuple(v.std(axis=0, ddof=1)) if len(vals) > 1 else (math.nan,) * 3
    return out


def run_stress(
    index_returns,
    stressor_returns,
    *,
    name: str = "stressor",
    variant: str = "GH",
    levels=(0.01, 0.05, 0.10),
    n: int = 10_000,
    seed: int,
    n_boot: int = 500,
    fit_seed: int = 0,
) -> StressReport:
    """Fit a bivariate GH law to (stressor, index), simulate ``n`` pairs and measure.

    Raw log-returns are used (no ARMA-GARCH filtering).
    """
    y = np.asarray(index_returns, dtype=float).ravel()
    x = np.asarray(stressor_returns, dtype=float).ravel()
    if x.size != y.size:
        raise ValidationError(f"paired series differ in length: {x.size} stressor vs {y.size} index values")
    if seed is None:
        raise ValidationError("run_stress requires an explicit seed")
    if n < 10_000:
        raise ValidationError(f"n must be >= 10000, got {n}")
    levels = tuple(sorted(float(q) for q in levels))
    gen = rngmod.stream(seed, f"stress:{name}")
    rho = float(np.corrcoef(x, y)[0, 1])
    if abs(rho) > 1 - 1e-12:
        # The pair lies on a line, so no bivariate density exists.  Fit the
        # stressor alone and map its draws onto the line (a comonotone or
        # countermonotone pair).
        log.warning("%s and the index are perfectly collinear; simulating y as an affine map of x", name)
        slope, intercept = np.polyfit(x, y, 1)
        px, _ = fit_univariate(x, variant, seed=fit_seed)
        sx = sample(px, n, gen)
        draws = np.column_stack([sx, intercept + slope * sx])
        fit = None
    else:
        fit = fit_bivariate(np.column_stack([x, y]), variant, seed=fit_seed)
        draws = sample2(fit.params, n, gen)
    measures = {q: stress_measures(draws, q) for q in levels}
    se = bootstrap_se(draws, levels, n_boot, seed, step=f"stress-bootstrap:{name}") if n_boot > 1 else {}
    monotone = _check_monotone(levels, measures)
    if not monotone:
        log.warning("stress measures for %s are not monotone in q (Monte Carlo noise)", name)
    return StressReport(name, levels, measures, se, n, seed, rho, fit, int(x.size), monotone)
