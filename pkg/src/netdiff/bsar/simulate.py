import logging

import numpy as np
from scipy import linalg

from netdiff import InvalidArgumentError, NumericFailureError
from netdiff.models.schemas import BsarParams, LatentDraw, Network
from netdiff.network.geometry import spectrum

logger = logging.getLogger(__name__)

_SINGULARITY_TOLERANCE = 1e-10


def design_matrix(X: object, n: int) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != n:
        raise InvalidArgumentError(f"X must have {n} rows, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise InvalidArgumentError("X needs at least one column")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("X contains non-finite values")
    return arr


def check_invertible(rho: float, eigenvalues: np.ndarray) -> None:
    """Raise unless I - rho*W is invertible, i.e. 1 - rho*lambda != 0 for every eigenvalue."""
    gaps = np.abs(1.0 - rho * eigenvalues)
    worst = int(np.argmin(gaps))
    if gaps[worst] < _SINGULARITY_TOLERANCE:
        lam = eigenvalues[worst]
        raise NumericFailureError(
            f"I - rho*W is singular at rho={rho}: eigenvalue {lam.real:.6g} gives 1 - rho*lambda ~ 0"
        )


def simulate_bsar(net: Network, X: object, params: BsarParams, seed: int) -> LatentDraw:
    """Draw Y* = (I - rho W)^-1 (X beta + eps) and threshold it at zero."""
    X = design_matrix(X, net.n)
    beta = np.asarray(params.beta, dtype=np.float64)
    if beta.size != X.shape[1]:
        raise InvalidArgumentError(
            f"beta has {beta.size} entries but X has {X.shape[1]} columns"
        )

    check_invertible(params.rho, spectrum(net.weights))

    rng = np.random.default_rng(seed)
    epsilon = rng.standard_normal(net.n) * params.error_sd
    system = np.eye(net.n) - params.rho * net.weights
    try:
        y_star = linalg.solve(system, X @ beta + epsilon)
    except linalg.LinAlgError as e:
        raise NumericFailureError(f"solving (I - rho W) y* = X beta + eps failed at rho={params.rho}: {e}") from e

    y = (y_star > 0).astype(np.int8)
    logger.debug("Simulated BSAR draw rho=%.3f n=%d share of ones %.3f", params.rho, net.n, y.mean())
    return LatentDraw(y_star=y_star, y=y, epsilon=epsilon)
