"""Socioeconomic well-being index: construction, GH-GARCH modelling,
Esscher option pricing, risk budgets and CoVaR stress tests."""

__version__ = "0.1.0"
