"""Exception hierarchy shared by every module of the package."""


class EwpsError(Exception):
    """Base class for all package errors."""


class DomainError(EwpsError, ValueError):
    """An argument lies outside the domain of the function or parameter space."""


class ConvergenceError(EwpsError, ArithmeticError):
    """A series or iterative routine failed to meet its stopping rule.

    Attributes
    ----------
    n_terms : int
        Number of terms or iterations consumed before giving up.
    last_term : float
        Magnitude of the last term (or step) seen.
    """

    def __init__(self, message, n_terms=None, last_term=None):
        super().__init__(message)
        self.n_terms = n_terms
        self.last_term = last_term


class IntegrabilityError(EwpsError, ArithmeticError):
    """Adaptive quadrature could not certify a finite integral."""


class SurvivalUnderflowError(EwpsError, OverflowError):
    """The survival function underflowed, so a ratio by it is meaningless."""


class FitError(EwpsError, RuntimeError):
    """Optimizer failure; carries the last iterate and its score."""

    def __init__(self, message, last_iterate=None, score=None, trace=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.score = score
        self.trace = trace
