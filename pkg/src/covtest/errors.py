"""Exception hierarchy shared by every module of the package."""


class CovtestError(Exception):
    """Base class for all errors raised by covtest."""


class DomainError(CovtestError, ValueError):
    """A parameter lies outside the range where the construction is defined."""


class DegenerateBand(DomainError):
    """The weight band has fewer than two diagonals (phi too large)."""


class DimensionMismatch(CovtestError, ValueError):
    pass


class SizeGuard(CovtestError, ValueError):
    """Input too large for a brute-force evaluation."""


class NotCorrelation(DomainError):
    """Matrix diagonal is not identically one."""


class NotPositiveDefinite(CovtestError, ArithmeticError):
    """Cholesky factorization broke down.

    Attributes
    ----------
    pivot : int
        1-based index of the leading minor that is not positive definite.
    """

    def __init__(self, pivot, message=None):
        self.pivot = int(pivot)
        super().__init__(message or f"matrix is not positive definite (pivot {self.pivot})")
