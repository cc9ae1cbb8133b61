"""Annual factor panel: loading, validation and the log-return transform."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

DEFAULT_REVERSED = ("CPI", "Unemploy", "Inequality", "CrimeRate", "Uncertainty", "GenderParity", "VXO")

# Canonical order of the thirteen published factors.
STANDARD_FACTORS = (
    "Confidence",
    "CPI",
    "CrimeRate",
    "DispIncome",
    "GDP",
    "GenderParity",
    "GovTrans",
    "Inequality",
    "LifeExpect",
    "Sentiment",
    "Uncertainty",
    "Unemploy",
    "VXO",
)


class PanelError(ValidationError):
    pass


class MissingFactorError(PanelError):
    pass


class NonNumericCellError(PanelError):
    pass


class MissingCellError(PanelError):
    pass


class YearGapError(PanelError):
    pass


class NonPositiveLevelError(PanelError):
    pass


@dataclass(frozen=True)
class PanelConfig:
    factors: tuple | None = None
    reversed: tuple = DEFAULT_REVERSED
    first_year: int | None = None
    last_year: int | None = None


@dataclass(frozen=True)
class FactorPanel:
    factor_names: tuple
    years: np.ndarray
    values: np.ndarray  # (factor, year)
    reverse_sign: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years, dtype=int)
        values = np.asarray(self.values, dtype=float)
        flags = np.asarray(self.reverse_sign, dtype=bool)
        object.__setattr__(self, "factor_names", tuple(self.factor_names))
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "reverse_sign", flags)
        if values.shape != (len(self.factor_names), years.size):
            raise PanelError(f"values shape {values.shape} does not match {len(self.factor_names)} factors x {years.size} years")
        if flags.shape != (len(self.factor_names),):
            raise PanelError("one reverse_sign flag per factor is required")
        _check_years(years)
        if not np.all(np.isfinite(values)):
            i, t = np.argwhere(~np.isfinite(values))[0]
            raise MissingCellError(f"factor {self.factor_names[i]!r}, year {years[t]}: value is not finite")

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class ReturnPanel:
    """Log-returns r(i, t); the first year is the zeroed base year."""

    factor_names: tuple
    years: np.ndarray
    returns: np.ndarray  # (factor, year)
    reverse_sign: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "factor_names", tuple(self.factor_names))
        object.__setattr__(self, "years", np.asarray(self.years, dtype=int))
        object.__setattr__(self, "returns", np.asarray(self.returns, dtype=float))
        flags = self.reverse_sign
        if flags is None:
            flags = np.zeros(len(self.factor_names), dtype=bool)
        object.__setattr__(self, "reverse_sign", np.asarray(flags, dtype=bool))
        if self.returns.shape != (len(self.factor_names), self.years.size):
            raise PanelError("returns shape does not match factors x years")
        _check_years(self.years)
        if not np.all(np.isfinite(self.returns)):
            raise PanelError("returns must be finite")
        if self.years.size and np.any(self.returns[:, 0] != 0):
            raise PanelError("base-year returns must be exactly zero")

    @property
    def labels(self) -> tuple:
        """Factor names with the ``Neg`` prefix on sign-reversed factors."""
        return tuple(("Neg" + n) if r else n for n, r in zip(self.factor_names, self.reverse_sign))

    def active(self) -> np.ndarray:
        """Returns without the zeroed base-year column."""
        return self.returns[:, 1:]

    def select(self, names) -> "ReturnPanel":
        idx = [self.factor_names.index(n) for n in names]
        return ReturnPanel(tuple(names), self.years, self.returns[idx], self.reverse_sign[idx])


def _check_years(years: np.ndarray) -> None:
    if years.size > 1:
        steps = np.diff(years)
        if np.any(steps != 1):
            k = int(np.argmax(steps != 1))
            raise YearGapError(f"years must be contiguous: {years[k]} is followed by {years[k + 1]}")


def _parse_cell(text: str, factor: str, year: int) -> float:
    text = text.strip()
    if text == "" or text.upper() in ("NA", "NAN"):
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise NonNumericCellError(f"factor {factor!r}, year {year}: non-numeric cell {text!r}") from None


def read_table(path) -> tuple[list[str], list[int], np.ndarray]:
    """Read a year-indexed table: header row, leading year column, ``#`` comments skipped."""
    path = Path(path)
    if not path.exists():
        raise PanelError(f"{path}: no such file")
    with open(path, newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        try:
            dialect = csv.Sniffer().sniff(sample.split("\n", 1)[0] if not sample.startswith("#") else
                                          next(l for l in sample.splitlines() if not l.startswith("#")),
                                          delimiters=",;\t")
        except (csv.Error, StopIteration):
            dialect = csv.excel
        rows = [r for r in csv.reader((l for l in fh if not l.startswith("#")), dialect) if r]
    if not rows:
        raise PanelError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    names = header[1:]
    years = []
    data = []
    for r in rows[1:]:
        try:
            year = int(float(r[0]))
        except ValueError:
            raise NonNumericCellError(f"{path}: non-numeric year {r[0]!r}") from None
        cells = list(r[1:]) + [""] * (len(names) - len(r) + 1)
        years.append(year)
        data.append([_parse_cell(c, n, year) for c, n in zip(cells, names)])
    order = np.argsort(years, kind="stable")
    years = [years[k] for k in order]
    if len(set(years)) != len(years):
        raise PanelError(f"{path}: duplicate year rows")
    values = np.array([data[k] for k in order], dtype=float).T if data else np.empty((len(names), 0))
    return names, years, values


def load_panel(source, config: PanelConfig | None = None) -> FactorPanel:
    """Load and validate a factor panel.

    Year ranges are intersected across factors before validation, so files
    with ragged edges are accepted; interior missing cells are an error.
    """
    config = config or PanelConfig()
    names, years, values = read_table(source)
    wanted = list(config.factors) if config.factors else names
    missing = [f for f in wanted if f not in names]
    if missing:
        raise MissingFactorError(f"{source}: missing factor column(s): {', '.join(missing)}")
    values = values[[names.index(f) for f in wanted]]
    years = np.asarray(years, dtype=int)

    lo, hi = years.min(initial=0), years.max(initial=0)
    for i, f in enumerate(wanted):
        ok = np.flatnonzero(np.isfinite(values[i]))
        if ok.size == 0:
            raise MissingCellError(f"factor {f!r}: no values")
        lo = max(lo, years[ok[0]])
        hi = min(hi, years[ok[-1]])
    if config.first_year is not None:
        lo = max(lo, config.first_year)
    if config.last_year is not None:
        hi = min(hi, config.last_year)
    keep = (years >= lo) & (years <= hi)
    years, values = years[keep], values[:, keep]
    if years.size == 0:
        raise PanelError(f"{source}: factors share no common years")
    _check_years(years)
    for i, f in enumerate(wanted):
        bad = np.flatnonzero(~np.isfinite(values[i]))
        if bad.size:
            raise MissingCellError(f"factor {f!r}, year {years[bad[0]]}: missing value")
        nonpos = np.flatnonzero(values[i] <= 0)
        if nonpos.size:
            raise NonPositiveLevelError(f"factor {f!r}, year {years[nonpos[0]]}: level {values[i, nonpos[0]]} is not positive")
    reversed_set = set(config.reversed)
    flags = np.array([f in reversed_set for f in wanted], dtype=bool)
    return FactorPanel(tuple(wanted), years, values, flags)


def to_log_returns(panel: FactorPanel) -> ReturnPanel:
    """r(i,t) = log P(i,t) - log P(i,t-1), negated for reversed factors; base year zero."""
    v = panel.values
    if np.any(v <= 0):
        i, t = np.argwhere(v <= 0)[0]
        raise NonPositiveLevelError(f"factor {panel.factor_names[i]!r}, year {panel.years[t]}: level {v[i, t]} is not positive")
    logs = np.log(v)
    r = np.zeros_like(logs)
    r[:, 1:] = np.diff(logs, axis=1)
    sign = np.where(panel.reverse_sign, -1.0, 1.0)
    r = r * sign[:, None]
    r[:, 0] = 0.0
    return ReturnPanel(panel.factor_names, panel.years, r, panel.reverse_sign)


def reverse(returns: ReturnPanel, names) -> ReturnPanel:
    """Flip the sign (and reversal flag) of the named factors."""
    names = set(names)
    mask = np.array([n in names for n in returns.factor_names])
    sign = np.where(mask, -1.0, 1.0)
    r = returns.returns * sign[:, None]
    r[:, 0] = 0.0
    return ReturnPanel(returns.factor_names, returns.years, r, returns.reverse_sign ^ mask)


def levels_from_returns(returns: ReturnPanel, base_levels) -> np.ndarray:
    """Invert :func:`to_log_returns` given the base-year levels."""
    sign = np.where(returns.reverse_sign, -1.0, 1.0)
    raw = returns.returns * sign[:, None]
    return np.asarray(base_levels, dtype=float)[:, None] * np.exp(np.cumsum(raw, axis=1))
