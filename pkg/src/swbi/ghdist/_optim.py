"""Multi-start optimizer with a perturbed-restart ladder, shared by the fitters."""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy import optimize

from ..errors import FitError

PENALTY = 1e100

log = logging.getLogger(__name__)


def at_bounds(x, bounds, tol: float = 1e-6) -> list[int]:
    """Indices of the coordinates of ``x`` lying on an edge of the search box."""
    if bounds is None:
        return []
    return [i for i, (v, (a, b)) in enumerate(zip(x, bounds)) if v - a <= tol or b - v <= tol]


def minimize_multistart(nll, starts, *, bounds=None, n_restarts: int = 5, seed: int = 0, label: str = "fit"):
    """Minimize ``nll`` from every start; retry from perturbed points if none converged.

    ``bounds`` is a list of (low, high) pairs for the unconstrained
    coordinates; it keeps the search away from degenerate limits (for example
    the Gaussian limit lambda -> infinity) where the likelihood can no longer
    be evaluated accurately.  Returns the scipy result with the lowest
    objective.  Raises FitError with
    the best-so-far point when no run converged after ``n_restarts`` retries.
    """

    lo = hi = None
    if bounds is not None:
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)

    def run(theta0):
        if lo is not None:
            theta0 = np.clip(theta0, lo, hi)
        return optimize.minimize(
            nll, theta0, method="L-BFGS-B", bounds=bounds, options=dict(maxiter=3000, ftol=1e-14, gtol=1e-9)
        )

    def ok(res):
        return math.isfinite(res.fun) and res.fun < PENALTY * 0.5 and np.all(np.isfinite(res.x))

    best = None
    converged = False
    for theta0 in starts:
        res = run(np.asarray(theta0, dtype=float))
        if best is None or res.fun < best.fun:
            best = res
        converged = converged or (ok(res) and res.success)
    rng = np.random.default_rng(seed)
    tries = 0
    while not (converged and ok(best)) and tries < n_restarts:
        tries += 1
        res = run(best.x + rng.normal(scale=0.5, size=best.x.size))
        if ok(res) and res.success:
            converged = True
        if res.fun < best.fun:
            best = res
    if not (converged and ok(best)):
        raise FitError(f"{label} did not converge after {n_restarts} restarts", best=best.x, loglik=-best.fun)
    edge = at_bounds(best.x, bounds)
    if edge:
        # the likelihood keeps rising toward a degenerate limit; the box decides the estimate
        log.warning("%s: optimum on the search-box edge in coordinate(s) %s", label, edge)
    return best
