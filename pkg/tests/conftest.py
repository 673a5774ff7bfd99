import numpy as np
import pytest

from netdiff.models.schemas import FitConfig, GibbsConfig, Network
from netdiff.network.geometry import build_network


# ──────────────────────────────────────────────
# Small hand-built networks
# ──────────────────────────────────────────────


def _undirected(n: int, edges: list[tuple[int, int]]) -> Network:
    adjacency = np.zeros((n, n))
    for i, j in edges:
        adjacency[i, j] = adjacency[j, i] = 1.0
    return build_network(adjacency)


@pytest.fixture
def dyad() -> Network:
    return _undirected(2, [(0, 1)])


@pytest.fixture
def path3() -> Network:
    """1-2-3 path, 0-based."""
    return _undirected(3, [(0, 1), (1, 2)])


@pytest.fixture
def triangle() -> Network:
    return _undirected(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def star5() -> Network:
    """Node 0 tied to nodes 1..4."""
    return _undirected(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def ring() -> Network:
    """20-node ring with ties to the two nearest neighbours on each side."""
    n = 20
    return _undirected(n, [(i, (i + k) % n) for i in range(n) for k in (1, 2)])


# ──────────────────────────────────────────────
# Fast estimator settings
# ──────────────────────────────────────────────


@pytest.fixture
def quick_gibbs() -> GibbsConfig:
    return GibbsConfig(n_iter=40, burn_in=10, rho_grid_size=25, seed=3)


@pytest.fixture
def quick_fit() -> FitConfig:
    return FitConfig(
        phase1_reps=6,
        phase2_subphases=2,
        phase2_base_iterations=8,
        phase3_reps=25,
        phase3_derivative_reps=8,
        seed=11,
    )
