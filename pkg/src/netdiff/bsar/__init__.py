from netdiff import NetdiffError


class DegenerateDataError(NetdiffError):
    """Raised when the outcome vector has a single class and the likelihood is unbounded."""


class DivergingCoefficientsError(NetdiffError):
    """Raised when maximum-likelihood coefficients diverge (perfect separation)."""
