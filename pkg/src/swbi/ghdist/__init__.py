"""Generalized Hyperbolic distributions (GH, VG, NIG)."""
from .params import BivariateGHParams, GHParams
from .univariate import cdf, density, fit_univariate, log_mgf, logpdf, mgf, ppf, sample
from .bivariate import fit_bivariate, logpdf2, sample2
from .gof import GofReport, gof

__all__ = [
    "BivariateGHParams",
    "GHParams",
    "GofReport",
    "cdf",
    "density",
    "fit_bivariate",
    "fit_univariate",
    "gof",
    "log_mgf",
    "logpdf",
    "logpdf2",
    "mgf",
    "ppf",
    "sample",
    "sample2",
]
