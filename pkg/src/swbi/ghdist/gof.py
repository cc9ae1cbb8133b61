"""Kolmogorov-Smirnov and Anderson-Darling tests against a fitted GH law.

Parameters are treated as known, so the p-values ignore estimation error
and are optimistic when the law was fitted to the same data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import ValidationError
from .params import GHParams
from .univariate import cdf


@dataclass(frozen=True)
class GofReport:
    ks_statistic: float
    ks_pvalue: float
    ad_statistic: float
    ad_pvalue: float
    sample_size: int


def ad_cdf(z: float) -> float:
    """Asymptotic null CDF of the Anderson-Darling statistic (Marsaglia & Marsaglia, 2004)."""
    if z <= 0:
        return 0.0
    if z < 2:
        return math.exp(-1.2337141 / z) / math.sqrt(z) * (
            2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z
        )
    return math.exp(-math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z))


def ks_statistic(u: np.ndarray) -> float:
    u = np.sort(u)
    n = u.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def ad_statistic(u: np.ndarray) -> float:
    u = np.clip(np.sort(u), 1e-300, 1 - 1e-16)
    n = u.size
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1])))
    return float(-n - s / n)


def gof(data, p: GHParams) -> GofReport:
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError("empty sample")
    u = np.asarray(cdf(p, x), dtype=float).ravel()
    n = x.size
    d = ks_statistic(u)
    a2 = max(ad_statistic(u), 0.0)
    ks_p = float(stats.kstwobign.sf(math.sqrt(n) * d))
    ad_p = float(min(max(1.0 - ad_cdf(a2), 0.0), 1.0))
    return GofReport(d, ks_p, a2, ad_p, n)
