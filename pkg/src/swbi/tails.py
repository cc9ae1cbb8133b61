"""Empirical left-tail statistics under one quantile convention.

VaR_q is the lower empirical quantile: the ceil(q N)-th smallest draw.  Every
module (risk summaries, ETL budgets, stress measures) goes through these
helpers so that results agree bit for bit.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

# Guards ceil() against q*N landing a hair above an integer, e.g. 0.1*10.
_EPS = 1e-9


def tail_count(n: int, q: float) -> int:
    """Number of order statistics at or below the lower q-quantile."""
    if not 0 < q < 1:
        raise ValidationError(f"level must lie in (0, 1), got {q}")
    return max(1, math.ceil(q * n - _EPS))


def lower_quantile(x, q: float) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError("empty sample")
    k = tail_count(x.size, q)
    return float(np.partition(x, k - 1)[k - 1])


def var_es(x, q: float) -> tuple[float, float]:
    """(VaR_q, ES_q) with ES the mean of draws at or below VaR_q."""
    x = np.asarray(x, dtype=float).ravel()
    v = lower_quantile(x, q)
    return v, float(np.mean(x[x <= v]))
