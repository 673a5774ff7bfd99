"""Behaviour effect statistics and the behaviour objective function.

Every statistic s_ki is evaluated for actor i against the weights row w_i.
Isolates (empty row) score 0 on both spatial statistics.
"""

import logging

import numpy as np

from netdiff import InvalidArgumentError
from netdiff.models.schemas import EffectKind, EffectSpec, Network

logger = logging.getLogger(__name__)


def weights_of(W: Network | np.ndarray) -> np.ndarray:
    if isinstance(W, Network):
        return W.weights
    arr = np.asarray(W, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"W must be a square matrix, got shape {arr.shape}")
    return arr


def covariate_matrix(X: object, n: int) -> np.ndarray:
    if X is None:
        return np.zeros((n, 0))
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != n:
        raise InvalidArgumentError(f"X must have {n} rows, got shape {arr.shape}")
    return arr


def check_theta(theta: object, effects: list[EffectSpec]) -> np.ndarray:
    arr = np.asarray(theta, dtype=np.float64)
    if arr.shape != (len(effects),):
        raise InvalidArgumentError(
            f"theta needs one coefficient per effect ({len(effects)}), got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("theta must be finite")
    return arr


def mean_similarity(W: Network | np.ndarray, *waves: np.ndarray) -> float:
    """Mean of 1 - |y_i - y_j| over adjacent ordered pairs, pooled over the given waves."""
    rows, cols = np.nonzero(weights_of(W))
    if rows.size == 0:
        logger.debug("No ties; mean similarity defaults to 0")
        return 0.0
    total = 0.0
    for y in waves:
        y = np.asarray(y, dtype=np.float64)
        total += float(np.sum(1.0 - np.abs(y[rows] - y[cols])))
    return total / (rows.size * len(waves))


def _require_mean_sim(spec: EffectSpec, mean_sim: float | None) -> float:
    if mean_sim is None:
        raise InvalidArgumentError(f"{spec.label} needs the observed mean similarity")
    return mean_sim


def effect_statistic(
    spec: EffectSpec,
    i: int,
    W: Network | np.ndarray,
    y: object,
    X: object = None,
    mean_sim: float | None = None,
    mean_behaviour: float = 0.0,
) -> float:
    """Actor i's contribution s_ki(y) to effect ``spec``.

    avAlt is taken around ``mean_behaviour``: (y_i - c) times the weighted
    mean of (y_j - c). With c = 0 it is y_i times the neighbour average.
    """
    w = weights_of(W)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if not 0 <= i < n:
        raise InvalidArgumentError(f"actor {i} outside 0..{n - 1}")
    row = w[i]
    total = row.sum()

    match spec.kind:
        case EffectKind.AV_ALT:
            if total == 0:
                return 0.0
            c = mean_behaviour
            return float((y[i] - c) * (row @ (y - c)) / total)
        case EffectKind.AV_SIM:
            mean_sim = _require_mean_sim(spec, mean_sim)
            if total == 0:
                return 0.0
            similarity = 1.0 - np.abs(y[i] - y)
            return float(row @ (similarity - mean_sim) / total)
        case EffectKind.EFF_FROM:
            x = covariate_matrix(X, n)
            if spec.covariate >= x.shape[1]:
                raise InvalidArgumentError(
                    f"{spec.label} refers to covariate {spec.covariate}, only {x.shape[1]} given"
                )
            return float(y[i] * x[i, spec.covariate])
        case EffectKind.LINEAR_SHAPE:
            return float(y[i])
    raise InvalidArgumentError(f"unknown effect kind {spec.kind!r}")


def statistic_vector(
    spec: EffectSpec,
    W: Network | np.ndarray,
    y: object,
    X: object = None,
    mean_sim: float | None = None,
    mean_behaviour: float = 0.0,
) -> np.ndarray:
    """effect_statistic for every actor at once."""
    w = weights_of(W)
    y = np.asarray(y, dtype=np.float64)
    totals = w.sum(axis=1)
    has_ties = totals > 0

    match spec.kind:
        case EffectKind.AV_ALT:
            c = mean_behaviour
            lagged = np.divide(w @ (y - c), totals, out=np.zeros_like(y), where=has_ties)
            return (y - c) * lagged
        case EffectKind.AV_SIM:
            mean_sim = _require_mean_sim(spec, mean_sim)
            # sum_j w_ij (1 - |y_i - y_j|) is w_i.y when y_i = 1 and totals - w_i.y when y_i = 0
            lag = w @ y
            matched = np.where(y == 1, lag, totals - lag)
            return np.divide(matched, totals, out=np.zeros_like(y), where=has_ties) - np.where(
                has_ties, mean_sim, 0.0
            )
        case EffectKind.EFF_FROM:
            x = covariate_matrix(X, y.shape[0])
            return y * x[:, spec.covariate]
        case EffectKind.LINEAR_SHAPE:
            return y.copy()
    raise InvalidArgumentError(f"unknown effect kind {spec.kind!r}")


def target_statistics(
    W: Network | np.ndarray,
    y_end: object,
    effects: list[EffectSpec],
    X: object = None,
    mean_sim: float | None = None,
    mean_behaviour: float = 0.0,
) -> np.ndarray:
    """S_k = sum_i s_ki(y_end), one entry per effect."""
    return np.array(
        [statistic_vector(spec, W, y_end, X, mean_sim, mean_behaviour).sum() for spec in effects]
    )


def behaviour_objective(
    i: int,
    W: Network | np.ndarray,
    y_prop: object,
    effects: list[EffectSpec],
    theta: object,
    X: object = None,
    mean_sim: float | None = None,
    y_current: object = None,
    mean_behaviour: float = 0.0,
) -> float:
    """f_i(y') = sum_k theta_k s_ki(y') for actor i's proposed state y'."""
    theta = check_theta(theta, effects)
    y_prop = np.asarray(y_prop)
    if y_current is not None:
        changed = np.flatnonzero(np.asarray(y_current) != y_prop)
        if np.any(changed != i):
            raise InvalidArgumentError(
                f"actor {i} may only change its own value; proposal also changes {changed[changed != i].tolist()}"
            )
    return float(
        sum(
            t * effect_statistic(spec, i, W, y_prop, X, mean_sim, mean_behaviour)
            for t, spec in zip(theta, effects)
        )
    )
