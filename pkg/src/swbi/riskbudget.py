"""Euler risk budgets for a weighted factor portfolio (standard deviation and ETL)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .tails import lower_quantile


def _matrix(returns, include_base_year: bool):
    """(names, observations x factors) from a ReturnPanel or an array."""
    if hasattr(returns, "returns"):
        r = returns.returns if include_base_year else returns.returns[:, 1:]
        names = returns.labels
        return tuple(names), np.asarray(r, dtype=float).T
    x = np.asarray(returns, dtype=float)
    if x.ndim != 2:
        raise ValidationError("returns must be a 2-D array (observations x factors)")
    return tuple(f"F{i + 1}" for i in range(x.shape[1])), x


def _weights(w, n):
    if w is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(w, dtype=float).ravel()
    if w.size != n:
        raise ValidationError(f"{w.size} weights for {n} factors")
    if abs(w.sum() - 1) > 1e-9:
        raise ValidationError(f"weights must sum to 1, got {w.sum():.12g}")
    return w


@dataclass(frozen=True)
class Budget:
    """One risk measure: total risk and per-factor MCTR/PCTR."""

    measure: str
    total: float
    mctr: np.ndarray
    pctr: np.ndarray
    tail_size: int = 0


def std_budget(returns, w=None, *, include_base_year: bool = True) -> Budget:
    """MCTR_i = w_i (S w)_i / sqrt(w'S w) with S the sample covariance."""
    _, x = _matrix(returns, include_base_year)
    w = _weights(w, x.shape[1])
    if x.shape[0] < 2:
        raise ValidationError("need at least two observations")
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    var = float(w @ cov @ w)
    if not var > 0:
        raise NumericalError("singular covariance: portfolio variance is zero")
    sd = math.sqrt(var)
    mctr = w * (cov @ w) / sd
    return Budget("Std", sd, mctr, mctr / mctr.sum())


def etl_budget(returns, w=None, q: float = 0.05, *, include_base_year: bool = True) -> Budget:
    """Component ETL at tail probability ``q``.

    Tail set: observations whose portfolio return is at or below the lower
    empirical q-quantile.  MCTR_i = -w_i * mean of r_i over the tail set, so
    the contributions add up to ETL = -mean portfolio return over the tail.
    """
    _, x = _matrix(returns, include_base_year)
    w = _weights(w, x.shape[1])
    if x.shape[0] == 0:
        raise ValidationError("no observations")
    # Summing each row's terms in sorted order makes p bitwise independent of the
    # factor order, so tied portfolio returns cannot straddle VaR after a permutation.
    p = np.sort(x * w, axis=1).sum(axis=1)
    v = lower_quantile(p, q)
    tail = p <= v
    if not np.any(tail):
        raise NumericalError("empty tail set; use a larger sample")
    mctr = -w * x[tail].mean(axis=0)
    etl = -float(p[tail].mean())
    if etl == 0:
        raise NumericalError("portfolio ETL is zero; percentage contributions are undefined")
    return Budget(f"ETL{round(100 * (1 - q)):d}", etl, mctr, mctr / etl, int(tail.sum()))


@dataclass(frozen=True)
class RiskBudgetTable:
    factor_names: tuple
    budgets: tuple = field(default_factory=tuple)

    @property
    def columns(self) -> list[str]:
        out = []
        for b in self.budgets:
            out += [f"MCTR_{b.measure}", f"PCTR_{b.measure}"]
        return out

    def column(self, name: str) -> np.ndarray:
        kind, measure = name.split("_", 1)
        for b in self.budgets:
            if b.measure == measure:
                return b.mctr if kind == "MCTR" else b.pctr
        raise KeyError(name)

    def totals(self) -> dict:
        return {b.measure: b.total for b in self.budgets}

    def rows(self):
        for i, name in enumerate(self.factor_names):
            vals = []
            for b in self.budgets:
                vals += [float(b.mctr[i]), float(b.pctr[i])]
            yield (name, *vals)


def risk_budget_table(returns, w=None, levels=(0.95, 0.99), *, include_base_year: bool = True) -> RiskBudgetTable:
    """ETL budgets at each confidence level followed by the Std budget."""
    names, x = _matrix(returns, include_base_year)
    budgets = []
    for lev in levels:
        q = 1 - lev if lev > 0.5 else lev
        budgets.append(etl_budget(x, w, q))
    budgets.append(std_budget(x, w))
    return RiskBudgetTable(names, tuple(budgets))


def group_budget(table: RiskBudgetTable, groups: dict) -> RiskBudgetTable:
    """Sum contributions over a partition of the factors.

    ``groups`` maps a group name to the factor names it contains.
    """
    seen = {}
    for g, members in groups.items():
        for m in members:
            if m not in table.factor_names:
                raise ValidationError(f"unknown factor {m!r} in group {g!r}")
            if m in seen:
                raise ValidationError(f"factor {m!r} is in both {seen[m]!r} and {g!r}")
            seen[m] = g
    left = [f for f in table.factor_names if f not in seen]
    if left:
        raise ValidationError(f"groups do not cover: {', '.join(left)}")
    idx = {f: i for i, f in enumerate(table.factor_names)}
    out = []
    for b in table.budgets:
        mctr = np.array([sum(b.mctr[idx[m]] for m in members) for members in groups.values()])
        pctr = np.array([sum(b.pctr[idx[m]] for m in members) for members in groups.values()])
        out.append(Budget(b.measure, b.total, mctr, pctr, b.tail_size))
    return RiskBudgetTable(tuple(groups), tuple(out))


# Factors with negative tail-risk contributions in the published 1986-2016 budget.
TAIL_DIVERSIFIERS = ("GovTrans", "DispIncome", "GDP", "NegInequality", "NegCrimeRate", "NegGenderParity", "LifeExpect")
