"""Seed tree for the Monte Carlo grid.

Each replication owns a child of the master seed keyed on (rho, n, rep), so a
cell's results never depend on which other cells run or in what order.
"""

import numpy as np
from pydantic import BaseModel


class ReplicationSeeds(BaseModel):
    replication: int
    network: int
    covariates: int
    errors: int
    gibbs: int
    saom: int


def rho_key(rho: float) -> int:
    # Shifted so negative rho values map to nonnegative spawn keys
    return round((rho + 10.0) * 1000)


def child_seed(master_seed: int, rho: float, n: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(rho_key(rho), n, rep))


def replication_seeds(master_seed: int, rho: float, n: int, rep: int) -> ReplicationSeeds:
    words = child_seed(master_seed, rho, n, rep).generate_state(6, dtype=np.uint32)
    replication, network, covariates, errors, gibbs, saom = (int(w) for w in words)
    return ReplicationSeeds(
        replication=replication,
        network=network,
        covariates=covariates,
        errors=errors,
        gibbs=gibbs,
        saom=saom,
    )
