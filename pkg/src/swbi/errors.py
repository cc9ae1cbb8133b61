"""Exception hierarchy shared by the pipeline.

``ValidationError`` subclasses map to CLI exit code 2, ``NumericalError``
subclasses to exit code 3.
"""


class SwbiError(Exception):
    pass


class ValidationError(SwbiError, ValueError):
    pass


class NumericalError(SwbiError, ArithmeticError):
    pass


class ParameterError(ValidationError):
    """Distribution or model parameters violate their invariants."""


class DomainError(NumericalError):
    """Argument outside the convergence strip of a moment generating function."""


class FitError(NumericalError):
    """Optimizer failed to converge; ``best`` holds the best-so-far estimate."""

    def __init__(self, message, best=None, loglik=None):
        super().__init__(message)
        self.best = best
        self.loglik = loglik


class SolverError(NumericalError):
    pass
