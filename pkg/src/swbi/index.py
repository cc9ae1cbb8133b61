"""Equal-weight standardized index and the PCA diagnostic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .panel import ReturnPanel


@dataclass(frozen=True)
class IndexSeries:
    years: np.ndarray
    r: np.ndarray
    m: float
    s: float
    factor_means: np.ndarray
    factor_scales: np.ndarray
    standardized: np.ndarray  # R(t)
    factor_names: tuple = ()
    include_base_year: bool = True

    def __post_init__(self):
        if np.asarray(self.r).shape != np.asarray(self.years).shape:
            raise ValidationError("index values and years differ in length")

    def active(self) -> np.ndarray:
        """Index returns without the zeroed base year."""
        return self.r[1:]

    def check(self, tol: float = 1e-12) -> None:
        """Assert the stored-field invariants."""
        if not np.allclose(self.m + self.s * self.standardized, self.r, rtol=0, atol=tol * max(1.0, np.max(np.abs(self.r)))):
            raise AssertionError("r_t != m + s R(t)")
        if abs(self.m - np.mean(self.factor_means)) > tol or abs(self.s - np.mean(self.factor_scales)) > tol:
            raise AssertionError("grand mean/scale are not the averages of the factor values")


def _zero_variance_check(names, sd):
    bad = [n for n, v in zip(names, sd) if not v > 0]
    if bad:
        raise ValidationError(f"zero-variance factor(s): {', '.join(bad)}")


def build_index(returns: ReturnPanel, include_base_year: bool = True) -> IndexSeries:
    """Form the index return series.

    (i)   R(i,t) = (r(i,t) - m(i)) / s(i) with the sample mean and sample
          standard deviation (ddof=1) of each factor;
    (ii)  R(t) = sum_i R(i,t) / sqrt(N);
    (iii) r_t = m + s * R(t), with m and s the averages of m(i) and s(i).

    The zeroed base year enters m(i) and s(i) unless ``include_base_year`` is
    false; R(t) and r_t are still reported for every year.
    """
    r = returns.returns
    n_factors, n_years = r.shape
    if n_factors == 0:
        raise ValidationError("no factors")
    est = r if include_base_year else r[:, 1:]
    if est.shape[1] < 2:
        raise ValidationError("need at least two years to estimate a standard deviation")
    mi = est.mean(axis=1)
    si = est.std(axis=1, ddof=1)
    _zero_variance_check(returns.factor_names, si)
    z = (r - mi[:, None]) / si[:, None]
    big_r = z.sum(axis=0) / np.sqrt(n_factors)
    m = float(np.mean(mi))
    s = float(np.mean(si))
    return IndexSeries(
        years=returns.years.copy(),
        r=m + s * big_r,
        m=m,
        s=s,
        factor_means=mi,
        factor_scales=si,
        standardized=big_r,
        factor_names=returns.factor_names,
        include_base_year=include_base_year,
    )


@dataclass(frozen=True)
class PcaSummary:
    eigenvalues: np.ndarray
    proportions: np.ndarray
    cumulative: np.ndarray
    loadings: np.ndarray  # columns are components
    factor_names: tuple = ()

    def components_for(self, share: float) -> int:
        """Smallest number of components whose cumulative proportion reaches ``share``."""
        return int(np.searchsorted(self.cumulative, share - 1e-12) + 1)


def pca(returns: ReturnPanel, include_base_year: bool = True) -> PcaSummary:
    """Eigen-decomposition of the factor-return correlation matrix."""
    r = returns.returns if include_base_year else returns.returns[:, 1:]
    if r.shape[0] < 2:
        raise ValidationError("PCA needs at least two factors")
    sd = r.std(axis=1, ddof=1)
    _zero_variance_check(returns.factor_names, sd)
    corr = np.corrcoef(r)
    vals, vecs = np.linalg.eigh(corr)
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, j]) > 1e-12)
        if nz.size and vecs[nz[0], j] < 0:
            vecs[:, j] = -vecs[:, j]
    props = vals / vals.sum()
    return PcaSummary(vals, props, np.cumsum(props), vecs, returns.factor_names)
