"""Random geometric networks and the algebra of their weight matrices."""

import logging
import math

import networkx as nx
import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist

from netdiff import InvalidArgumentError, NumericFailureError
from netdiff.models.schemas import Network

logger = logging.getLogger(__name__)

_MAX_BISECTION_STEPS = 200


def _square(matrix: object, name: str) -> np.ndarray:
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


def row_normalize(adjacency: object) -> np.ndarray:
    """Divide every row with a neighbour by its row sum; isolate rows stay zero."""
    a = _square(adjacency, "adjacency")
    if np.any(np.diag(a) != 0):
        raise InvalidArgumentError("adjacency must have a zero diagonal")
    if np.any(a < 0):
        raise InvalidArgumentError("adjacency must be nonnegative")
    row_sums = a.sum(axis=1, keepdims=True)
    return np.divide(a, row_sums, out=np.zeros_like(a), where=row_sums > 0)


def build_network(
    adjacency: object,
    coords: np.ndarray | None = None,
    radius: float | None = None,
) -> Network:
    a = _square(adjacency, "adjacency")
    return Network(
        n=a.shape[0],
        adjacency=a,
        weights=row_normalize(a),
        coords=coords,
        radius=radius,
    )


def _edges_within(sorted_distances: np.ndarray, radius: float) -> int:
    return int(np.searchsorted(sorted_distances, radius, side="right"))


def _choose_radius(sorted_distances: np.ndarray, n: int, target: float) -> float:
    """Bisect d on the realized point set for the mean degree closest to target."""
    lo, hi = 0.0, math.sqrt(2.0)
    for _ in range(_MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if 2.0 * _edges_within(sorted_distances, mid) / n < target:
            lo = mid
        else:
            hi = mid

    k_lo = _edges_within(sorted_distances, lo)
    k_hi = _edges_within(sorted_distances, hi)
    below = target - 2.0 * k_lo / n
    above = 2.0 * k_hi / n - target
    k = k_lo if below <= above else k_hi

    # Midway between consecutive pair distances keeps the threshold away from ties
    if k == 0:
        return 0.5 * float(sorted_distances[0])
    if k >= sorted_distances.size:
        return float(sorted_distances[-1])
    return 0.5 * float(sorted_distances[k - 1] + sorted_distances[k])


def generate_random_geometric(n: int, target_avg_degree: float, seed: int) -> Network:
    """Place n points uniformly in the unit square and tie pairs within distance d."""
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    if target_avg_degree <= 0:
        raise InvalidArgumentError(
            f"target_avg_degree must be positive, got {target_avg_degree}"
        )

    rng = np.random.default_rng(seed)
    coords = rng.random((n, 2))
    if n == 1:
        return build_network(np.zeros((1, 1)), coords=coords, radius=0.0)
    if target_avg_degree >= n - 1:
        raise InvalidArgumentError(
            f"target_avg_degree {target_avg_degree} is unreachable with {n} nodes"
        )

    sorted_distances = np.sort(pdist(coords))
    radius = _choose_radius(sorted_distances, n, target_avg_degree)

    graph = nx.random_geometric_graph(
        n, radius, pos={i: tuple(coords[i]) for i in range(n)}
    )
    adjacency = nx.to_numpy_array(graph, nodelist=range(n), dtype=np.float64)
    network = build_network(adjacency, coords=coords, radius=radius)

    isolates = int(np.sum(network.degrees == 0))
    logger.debug(
        "Random geometric network n=%d d=%.6f mean degree %.3f (target %.2f, %d isolates)",
        n,
        radius,
        network.mean_degree,
        target_avg_degree,
        isolates,
    )
    return network


def spectrum(weights: object) -> np.ndarray:
    """Eigenvalues of W from a dense eigendecomposition."""
    w = _square(weights, "weights")
    try:
        eigenvalues = linalg.eigvals(w)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericFailureError(f"eigendecomposition of W failed: {e}") from e
    if not np.all(np.isfinite(eigenvalues)):
        raise NumericFailureError("eigendecomposition of W returned non-finite values")
    return eigenvalues


def eigen_bounds(weights: object) -> tuple[float, float]:
    """Smallest and largest real parts of the eigenvalues of W."""
    real = spectrum(weights).real
    return float(real.min()), float(real.max())
