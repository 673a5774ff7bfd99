"""Reduce replication rows to per-cell summaries and the appendix-style tables."""

import logging
import math

import pandas as pd

from netdiff.models.schemas import CellSummary, Estimator, ReplicationRow
from netdiff.saom.estimation import passes_convergence_thresholds

logger = logging.getLogger(__name__)

_ESTIMATOR_ORDER = {e: k for k, e in enumerate(Estimator)}


def is_accepted(row: ReplicationRow) -> bool:
    """Gibbs rows count unless they failed; SAOM rows must also pass the convergence rule."""
    if row.failed:
        return False
    if row.estimator == Estimator.GIBBS:
        return True
    return passes_convergence_thresholds(row.t_conv_max, row.t_conv_spatial, row.converged)


def _finite(values: pd.Series) -> pd.Series:
    return values[values.map(lambda v: v is not None and math.isfinite(v))]


def _mean(values: pd.Series) -> float | None:
    values = _finite(values)
    return float(values.mean()) if len(values) else None


def _sd(values: pd.Series) -> float | None:
    values = _finite(values)
    # Sample sd needs at least two values
    return float(values.std(ddof=1)) if len(values) > 1 else None


def _rate(flags: pd.Series) -> float | None:
    return float(flags.mean()) if len(flags) else None


def aggregate(rows: list[ReplicationRow]) -> list[CellSummary]:
    if not rows:
        return []
    frame = pd.DataFrame([r.model_dump() for r in rows])
    frame["accepted_now"] = [is_accepted(r) for r in rows]
    frame["estimator_order"] = frame["estimator"].map(_ESTIMATOR_ORDER)

    summaries = []
    keys = ["n", "rho", "estimator_order"]
    for (n, rho, order), group in frame.sort_values(keys).groupby(keys, sort=True):
        accepted = group[group["accepted_now"]]
        estimator = list(Estimator)[order]
        if accepted.empty:
            logger.info("No accepted replications for %s at rho=%+.2f n=%d", estimator.value, rho, n)
        summaries.append(
            CellSummary(
                rho=float(rho),
                n=int(n),
                estimator=estimator,
                reps=len(group),
                n_accepted=len(accepted),
                convergence_rate=len(accepted) / len(group),
                spatial_mean=_mean(accepted["spatial_est"]),
                spatial_sd=_sd(accepted["spatial_est"]),
                slope_mean=_mean(accepted["slope_est"]),
                slope_sd=_sd(accepted["slope_est"]),
                spatial_sig_rate=_rate(accepted["spatial_sig"].astype(float)),
                slope_sig_rate=_rate(accepted["slope_sig"].astype(float)),
            )
        )
    return summaries


# ──────────────────────────────────────────────
# Appendix-style tables
# ──────────────────────────────────────────────


def summary_frame(summaries: list[CellSummary]) -> pd.DataFrame:
    frame = pd.DataFrame([s.model_dump(mode="json") for s in summaries])
    return frame


def _pivot(frame: pd.DataFrame, columns: dict[str, str]) -> pd.DataFrame:
    wide = frame.pivot(index=["rho", "n"], columns="estimator", values=list(columns))
    estimators = [e.value for e in Estimator if e.value in set(frame["estimator"])]
    ordered = [(col, est) for est in estimators for col in columns]
    wide = wide[ordered]
    wide.columns = [f"{est}_{columns[col]}" for col, est in ordered]
    return wide.reset_index().sort_values(["n", "rho"]).reset_index(drop=True)


def appendix_tables(summaries: list[CellSummary]) -> dict[str, pd.DataFrame]:
    """Counts, spatial estimates, slope estimates and significance proportions, one row per (rho, n)."""
    frame = summary_frame(summaries)
    if frame.empty:
        return {}
    return {
        "convergence": _pivot(frame, {"reps": "reps", "n_accepted": "accepted", "convergence_rate": "rate"}),
        "spatial": _pivot(frame, {"spatial_mean": "mean", "spatial_sd": "sd"}),
        "slope": _pivot(frame, {"slope_mean": "mean", "slope_sd": "sd"}),
        "significance": _pivot(frame, {"spatial_sig_rate": "spatial", "slope_sig_rate": "slope"}),
    }
