"""Load observed data: long-format panels and per-node tables."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from netdiff import DataValidationError
from netdiff.models.run_config import DataSource, NodeTableSource, PanelSource
from netdiff.models.schemas import Network, PanelDataset
from netdiff.network.geometry import build_network
from netdiff.network.io import read_network

logger = logging.getLogger(__name__)

_MAX_LISTED = 10


def _read_csv(path: str | Path, **kwargs: object) -> pd.DataFrame:
    # Tables written by netdiff start with a provenance comment line
    kwargs.setdefault("comment", "#")
    try:
        return pd.read_csv(path, **kwargs)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataValidationError(f"cannot read {path}: {e}") from e


def _require_columns(frame: pd.DataFrame, columns: list[str], path: str | Path) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{path} is missing columns {missing}")


def _listing(pairs: list[tuple[str, str]]) -> str:
    shown = ", ".join(f"({u}, {w})" for u, w in pairs[:_MAX_LISTED])
    more = len(pairs) - _MAX_LISTED
    return shown + (f" and {more} more" if more > 0 else "")


def _numeric_columns(
    frame: pd.DataFrame, columns: list[str], path: str | Path, keys: list[str] | None = None
) -> pd.DataFrame:
    """Copy of ``frame`` with ``columns`` as floats; missing cells stay NaN."""
    out = frame.copy()
    for column in columns:
        values = pd.to_numeric(frame[column], errors="coerce")
        bad = values.isna() & frame[column].notna()
        if bad.any():
            if keys:
                where = _listing(list(frame.loc[bad, keys].astype(str).itertuples(index=False)))
            else:
                where = f"data rows {frame.index[bad].tolist()[:_MAX_LISTED]}"
            raise DataValidationError(f"{path}: non-numeric {column!r} values at {where}")
        out[column] = values.astype(np.float64)
    return out


def _wave_order(values: pd.Series) -> list[object]:
    labels = values.unique().tolist()
    try:
        return sorted(labels, key=float)
    except (TypeError, ValueError):
        return sorted(labels, key=str)


# ──────────────────────────────────────────────
# Proximity
# ──────────────────────────────────────────────


def _edge_list_network(path: Path, units: list[str]) -> Network:
    frame = _read_csv(path, dtype=str, header=None, comment="#")
    if frame.shape[1] != 2:
        raise DataValidationError(f"{path}: edge list needs exactly two columns of unit ids")
    # A header row of names is allowed
    if not set(frame.iloc[0]) <= set(units):
        frame = frame.iloc[1:]
    position = {u: k for k, u in enumerate(units)}
    unknown = sorted(set(frame[0]).union(frame[1]) - set(units))
    if unknown:
        raise DataValidationError(f"{path}: unknown unit ids {unknown[:_MAX_LISTED]}")
    adjacency = np.zeros((len(units), len(units)))
    for a, b in zip(frame[0], frame[1]):
        if a == b:
            raise DataValidationError(f"{path}: self-tie on unit {a}")
        adjacency[position[a], position[b]] = adjacency[position[b], position[a]] = 1.0
    return build_network(adjacency)


def _distance_network(path: Path, units: list[str], threshold: float) -> Network:
    frame = _read_csv(path, index_col=0)
    frame.index = frame.index.astype(str)
    frame.columns = frame.columns.astype(str)
    if set(frame.index) != set(units) or set(frame.columns) != set(units):
        raise DataValidationError(f"{path}: distance matrix ids do not match the panel units")
    distances = frame.loc[units, units].to_numpy(dtype=np.float64)
    if np.isnan(distances).any():
        raise DataValidationError(f"{path}: distance matrix has missing entries")
    if not np.allclose(distances, distances.T):
        raise DataValidationError(f"{path}: distance matrix is not symmetric")
    adjacency = (distances <= threshold).astype(np.float64)
    np.fill_diagonal(adjacency, 0.0)
    logger.info("Thresholded distances at %g: %d ties", threshold, int(adjacency.sum()) // 2)
    return build_network(adjacency)


def load_proximity(source: PanelSource, units: list[str]) -> Network:
    if source.proximity_format == "distance":
        return _distance_network(source.proximity, units, source.distance_threshold)
    if source.proximity_format == "network":
        net = read_network(source.proximity)
        if net.n != len(units):
            raise DataValidationError(
                f"{source.proximity} has {net.n} nodes for {len(units)} panel units"
            )
        return net
    return _edge_list_network(source.proximity, units)


# ──────────────────────────────────────────────
# Panel ingest
# ──────────────────────────────────────────────


def _fill_covariate(wide: pd.DataFrame, name: str) -> pd.DataFrame:
    """Interpolate interior gaps within each unit, then impute the overall observed mean.

    Numeric wave labels are used as positions, so a gap between waves 1 and 4
    is filled in proportion to the distance. Other labels count as evenly spaced.
    """
    observed = wide.to_numpy()
    if np.isnan(observed).all():
        raise DataValidationError(f"covariate {name} has no observed values")
    overall = float(np.nanmean(observed))
    try:
        position = pd.Index(pd.to_numeric(wide.index), dtype=np.float64)
    except (ValueError, TypeError):
        position = pd.RangeIndex(len(wide))
    filled = (
        wide.set_axis(position, axis=0)
        .interpolate(method="index", axis=0, limit_area="inside")
        .set_axis(wide.index, axis=0)
    )
    imputed = int(filled.isna().sum().sum())
    if imputed:
        logger.info("Covariate %s: %d cells imputed with the overall mean %.4g", name, imputed, overall)
    return filled.fillna(overall)


def ingest_panel(source: PanelSource) -> PanelDataset:
    uc, wc, yc = source.unit_column, source.wave_column, source.outcome_column

    outcomes = _read_csv(source.outcomes, dtype={uc: str})
    _require_columns(outcomes, [uc, wc, yc], source.outcomes)
    outcomes = _numeric_columns(outcomes, [yc], source.outcomes, keys=[uc, wc])
    duplicated = outcomes.duplicated([uc, wc])
    if duplicated.any():
        pairs = outcomes.loc[duplicated, [uc, wc]].astype(str).itertuples(index=False)
        raise DataValidationError(f"duplicate outcome rows for {_listing(list(pairs))}")

    units = sorted(outcomes[uc].unique().tolist())
    waves = _wave_order(outcomes[wc])
    wide_y = outcomes.pivot(index=wc, columns=uc, values=yc).reindex(index=waves, columns=units)

    missing = [
        (unit, str(wave))
        for wave in waves
        for unit in units
        if pd.isna(wide_y.at[wave, unit])
    ]
    if missing:
        raise DataValidationError(f"missing outcome for (unit, wave) {_listing(missing)}")
    values = wide_y.to_numpy(dtype=np.float64)
    if not np.all((values == 0) | (values == 1)):
        raise DataValidationError("outcomes must be 0 or 1")

    covariates = _read_csv(source.covariates, dtype={uc: str})
    _require_columns(covariates, [uc, wc], source.covariates)
    covariate_units = set(covariates[uc].unique())
    if covariate_units != set(units):
        only_cov = sorted(covariate_units - set(units))
        only_out = sorted(set(units) - covariate_units)
        raise DataValidationError(
            f"unit ids differ between files: only in covariates {only_cov[:_MAX_LISTED]}, "
            f"only in outcomes {only_out[:_MAX_LISTED]}"
        )
    names = source.covariate_columns or [c for c in covariates.columns if c not in (uc, wc)]
    _require_columns(covariates, names, source.covariates)
    covariates = _numeric_columns(covariates, names, source.covariates, keys=[uc, wc])
    if covariates.duplicated([uc, wc]).any():
        raise DataValidationError(f"{source.covariates} has duplicate (unit, wave) rows")

    layers = []
    for name in names:
        wide = covariates.pivot(index=wc, columns=uc, values=name).reindex(index=waves, columns=units)
        layers.append(_fill_covariate(wide.astype(np.float64), name).to_numpy())
    stacked = np.stack(layers, axis=2) if layers else np.zeros((len(waves), len(units), 0))

    network = load_proximity(source, units)
    logger.info(
        "Ingested panel: %d units, %d waves, %d covariates, %d ties",
        len(units),
        len(waves),
        len(names),
        network.edge_count,
    )
    return PanelDataset(
        unit_ids=units,
        wave_labels=[str(w) for w in waves],
        outcomes=values.astype(np.int8),
        covariates=stacked,
        covariate_names=list(names),
        network=network,
    )


# ──────────────────────────────────────────────
# Cross sections for the static estimators
# ──────────────────────────────────────────────


def mean_impute(X: np.ndarray) -> np.ndarray:
    X = np.array(X, dtype=np.float64)
    gaps = np.isnan(X)
    if gaps.any():
        column_means = np.nanmean(X, axis=0)
        if np.isnan(column_means).any():
            raise DataValidationError("a covariate column has no observed values")
        X[gaps] = np.take(column_means, np.nonzero(gaps)[1])
        logger.info("Mean-imputed %d covariate cells", int(gaps.sum()))
    return X


def load_cross_section(
    source: DataSource,
) -> tuple[Network, np.ndarray, np.ndarray, list[str]]:
    """Network, covariate matrix, binary outcome and column names for one cross section."""
    if isinstance(source, NodeTableSource):
        net = read_network(source.network)
        table = _read_csv(source.table)
        _require_columns(table, [source.y_column, *source.x_columns], source.table)
        table = _numeric_columns(table, [source.y_column, *source.x_columns], source.table)
        if len(table) != net.n:
            raise DataValidationError(f"{source.table} has {len(table)} rows for {net.n} nodes")
        if table[source.y_column].isna().any():
            raise DataValidationError(f"{source.table}: outcome column has missing values")
        X = mean_impute(table[source.x_columns].to_numpy(dtype=np.float64))
        y = table[source.y_column].to_numpy()
        names = list(source.x_columns)
    else:
        panel = ingest_panel(source)
        try:
            t = panel.wave_index(source.wave)
        except ValueError:
            raise DataValidationError(f"wave {source.wave!r} not in {panel.wave_labels}") from None
        net, X, y, names = panel.network, panel.covariates[t], panel.outcomes[t], panel.covariate_names

    if source.add_intercept:
        X = np.column_stack([np.ones(X.shape[0]), X])
        names = ["const", *names]
    if not np.all((y == 0) | (y == 1)):
        raise DataValidationError("outcomes must be 0 or 1")
    return net, X, np.asarray(y, dtype=np.int8), names


def load_panel(source: DataSource) -> PanelDataset:
    if not isinstance(source, PanelSource):
        raise DataValidationError("panel mode needs a panel data source")
    return ingest_panel(source)
