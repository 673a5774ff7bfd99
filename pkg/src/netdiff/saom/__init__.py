from netdiff import NetdiffError


class SingularDerivativeError(NetdiffError):
    """Raised when the Phase-1 derivative matrix of the moment function is singular."""
