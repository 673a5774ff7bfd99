from netdiff import NetdiffError


class ArtifactError(NetdiffError):
    """Raised when an artifact cannot be written or read back."""
