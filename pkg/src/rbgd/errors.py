"""Exception hierarchy shared by every module in the package."""


class RBGDError(Exception):
    """Base class for all errors raised by :mod:`rbgd`."""


class NumericalFailure(RBGDError):
    """A dense factorization (SVD) failed to converge."""


class SingularSystemError(RBGDError):
    """Zero pivot encountered in a tridiagonal solve."""


class DegenerateProjectionError(RBGDError):
    """Rank-deficient input to a polar factor or manifold projection."""


class RetractionDomainError(DegenerateProjectionError):
    """Retraction or projection evaluated outside its domain."""


class FeasibilityError(RBGDError):
    """A point does not lie on the manifold it claims to belong to."""


class DomainError(RBGDError):
    """A reference function was evaluated outside its domain.

    ``index`` holds the flat index of the first offending entry.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class RootNotBracketedError(RBGDError):
    """No sign change found after bracket expansion."""


class InfeasibleSubproblemError(RBGDError):
    """The scalar-root solution leaves the domain of the reference function."""


class InexactSolveError(RBGDError):
    """An iterative inner solver hit its iteration cap."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}
