from netdiff.network.geometry import (
    build_network,
    eigen_bounds,
    generate_random_geometric,
    row_normalize,
)
from netdiff.network.io import network_io, read_network, write_network

__all__ = [
    "build_network",
    "eigen_bounds",
    "generate_random_geometric",
    "network_io",
    "read_network",
    "row_normalize",
    "write_network",
]
