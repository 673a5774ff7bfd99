import logging

import numpy as np
from pydantic import ValidationError

from netdiff import InvalidArgumentError
from netdiff.models.schemas import EffectKind, EffectSpec, Network, SaomProblem
from netdiff.saom.effects import covariate_matrix, mean_similarity

logger = logging.getLogger(__name__)

# Nodes whose values are mirrored across the two fake waves
ANCHOR_PAIR = (0, 1)


def _binary_vector(y: object, n: int, name: str) -> np.ndarray:
    arr = np.asarray(y)
    if arr.shape != (n,):
        raise InvalidArgumentError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise InvalidArgumentError(f"{name} must be binary")
    return arr.astype(np.int8)


def _centred(matrices: list[np.ndarray]) -> list[np.ndarray]:
    """Subtract the column means pooled over every wave."""
    pooled = np.vstack(matrices)
    constant = np.flatnonzero(np.ptp(pooled, axis=0) == 0)
    if constant.size:
        logger.warning("Covariate columns %s are constant and vanish once centred", constant.tolist())
    centre = pooled.mean(axis=0)
    return [m - centre for m in matrices]


def _problem(**fields: object) -> SaomProblem:
    try:
        return SaomProblem(**fields)
    except ValidationError as e:
        raise InvalidArgumentError(str(e)) from e


def build_cross_sectional_problem(
    net: Network, y: object, X: object, effects: list[EffectSpec]
) -> SaomProblem:
    """Two fake waves equal to y except for a mirrored anchor pair.

    Without the anchors the waves would be identical and no parameter could
    be identified. linearShape is dropped; the rate is fixed at one.
    Covariates are centred on their means and avAlt on the mean of y.
    """
    n = net.n
    if n < 3:
        raise InvalidArgumentError(f"cross-sectional mode needs n >= 3, got {n}")
    y = _binary_vector(y, n, "y")
    (X,) = _centred([covariate_matrix(X, n)])

    kept = [e for e in effects if e.kind != EffectKind.LINEAR_SHAPE]
    if len(kept) < len(effects):
        logger.info("Removed linearShape: not identified with two fake waves")
    if not kept:
        raise InvalidArgumentError("no effects left after removing linearShape")

    a, b = ANCHOR_PAIR
    first, second = y.copy(), y.copy()
    first[a], first[b] = 0, 1
    second[a], second[b] = 1, 0

    return _problem(
        network=net,
        waves=[first, second],
        covariates=[X, X],
        effects=kept,
        behaviour_rate=1.0,
        anchor_pair=ANCHOR_PAIR,
        mean_sim=mean_similarity(net, y),
        mean_behaviour=float(y.mean()),
    )


def build_panel_problem(
    net: Network,
    waves: list[object],
    covariates: list[object] | object,
    effects: list[EffectSpec],
) -> SaomProblem:
    """Multi-wave behaviour problem; one period between each pair of consecutive waves.

    ``covariates`` is either one matrix per wave or a single matrix shared by all.
    Covariates and avAlt are centred on means pooled over all waves.
    """
    if len(waves) < 2:
        raise InvalidArgumentError(f"panel mode needs at least two waves, got {len(waves)}")
    n = net.n
    waves = [_binary_vector(w, n, f"wave {t}") for t, w in enumerate(waves)]

    if isinstance(covariates, list):
        if len(covariates) != len(waves):
            raise InvalidArgumentError(
                f"got {len(covariates)} covariate matrices for {len(waves)} waves"
            )
        per_wave = [covariate_matrix(c, n) for c in covariates]
    else:
        shared = covariate_matrix(covariates, n)
        per_wave = [shared] * len(waves)
    per_wave = _centred(per_wave)

    return _problem(
        network=net,
        waves=waves,
        covariates=per_wave,
        effects=list(effects),
        behaviour_rate=1.0,
        mean_sim=mean_similarity(net, *waves),
        mean_behaviour=float(np.mean(waves)),
    )
