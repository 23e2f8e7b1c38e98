"""Exception types raised across the package."""


class EnsemblageError(Exception):
    """Base class for all package errors."""


class DimMismatch(EnsemblageError, ValueError):
    pass


class NotHermitian(EnsemblageError, ValueError):
    pass


class NotPSD(EnsemblageError, ValueError):
    pass


class InvalidState(EnsemblageError, ValueError):
    """A matrix or vector could not be repaired into a valid quantum object."""


class BadRank(EnsemblageError, ValueError):
    pass


class BadWeights(EnsemblageError, ValueError):
    pass


class BadDecomposition(EnsemblageError, ValueError):
    pass


class BadPartition(EnsemblageError, ValueError):
    pass


class UnsupportedDim(EnsemblageError, ValueError):
    pass


class Infeasible(EnsemblageError, RuntimeError):
    pass


class NoConvergence(EnsemblageError, RuntimeError):
    """An iterative routine ran out of budget.

    ``best`` carries whatever best-so-far result the routine had, so callers
    can still report it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
