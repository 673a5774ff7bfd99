"""CSV artifacts on disk. Every file starts with a provenance comment line:

    # netdiff config_hash=<sha256 of the effective config> master_seed=<int>
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel

from netdiff.models.schemas import (
    CellSummary,
    FitResult,
    LatentDraw,
    MinistepRecord,
    Network,
    PosteriorSummary,
    ProbitResult,
    ReplicationRow,
)
from netdiff.network.io import write_network
from netdiff.storage import ArtifactError

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# netdiff"

RESULTS_COLUMNS = [
    "cell_id", "rho", "n", "rep", "estimator",
    "spatial_est", "spatial_se", "spatial_sig",
    "slope_est", "slope_se", "slope_sig",
    "converged", "accepted", "seconds", "seed",
    "t_conv_max", "t_conv_spatial", "failed", "error",
]  # fmt: skip

TRACE_COLUMNS = [
    "index", "time", "actor", "option", "objective_stay", "objective_toggle", "probability",
]  # fmt: skip


def config_hash(config: BaseModel | dict[str, Any]) -> str:
    payload = config.model_dump(mode="json") if isinstance(config, BaseModel) else config
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def header_line(digest: str, master_seed: int) -> str:
    return f"{HEADER_PREFIX} config_hash={digest} master_seed={master_seed}"


def _plain(frame: pd.DataFrame) -> pd.DataFrame:
    out = frame.copy()
    for column in out.columns:
        if out[column].dtype == bool:
            out[column] = out[column].astype(int)
        elif out[column].dtype == object:
            out[column] = out[column].map(
                lambda v: int(v) if isinstance(v, (bool, np.bool_)) else getattr(v, "value", v)
            )
    return out


class ArtifactStore:
    """Single writer for every file a command produces."""

    def __init__(self, out_dir: str | Path, digest: str, master_seed: int) -> None:
        self.out_dir = Path(out_dir)
        self.digest = digest
        self.master_seed = master_seed

    @property
    def header(self) -> str:
        return header_line(self.digest, self.master_seed)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _ensure_dir(self) -> None:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactError(f"cannot create output directory {self.out_dir}: {e}") from e

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        self._ensure_dir()
        target = self.path(name)
        body = _plain(frame).to_csv(index=False, na_rep="", lineterminator="\n")
        try:
            target.write_text(f"{self.header}\n{body}", encoding="utf-8")
        except OSError as e:
            logger.exception("Failed to write %s", target)
            raise ArtifactError(f"cannot write {target}: {e}") from e
        logger.info("Wrote %s (%d rows)", target, len(frame))
        return target

    def write_models(self, name: str, rows: list[BaseModel], columns: list[str] | None = None) -> Path:
        frame = pd.DataFrame([r.model_dump() for r in rows], columns=columns)
        return self.write_frame(name, frame)

    # ── per-command artifacts ──

    def write_network(self, name: str, network: Network) -> Path:
        self._ensure_dir()
        target = self.path(name)
        header = self.header.removeprefix("# ")
        try:
            write_network(target, network, header_lines=[header])
        except OSError as e:
            raise ArtifactError(f"cannot write {target}: {e}") from e
        return target

    def write_dataset(self, name: str, X: np.ndarray, draw: LatentDraw, names: list[str]) -> Path:
        frame = pd.DataFrame(X, columns=names)
        frame.insert(0, "node", np.arange(X.shape[0]))
        frame["y"] = draw.y
        frame["y_star"] = draw.y_star
        frame["epsilon"] = draw.epsilon
        return self.write_frame(name, frame)

    def write_posterior(self, name: str, summary: PosteriorSummary) -> Path:
        return self.write_frame(name, pd.DataFrame(summary.rows()))

    def write_probit(self, name: str, result: ProbitResult) -> Path:
        return self.write_frame(name, pd.DataFrame(result.rows()))

    def write_fit(
        self,
        name: str,
        result: FitResult,
        accepted: bool,
        significant: list[bool] | None = None,
        record_timings: bool = False,
    ) -> Path:
        record: dict[str, Any] = {"effects": "|".join(result.effect_labels)}
        for k, label in enumerate(result.effect_labels):
            record[f"theta_{label}"] = result.theta_hat[k]
            record[f"se_{label}"] = result.std_errors[k]
            record[f"tconv_{label}"] = result.t_conv[k]
            if significant is not None:
                record[f"sig_{label}"] = int(significant[k])
        record.update(
            t_conv_max=result.t_conv_max,
            converged=int(result.converged),
            accepted=int(accepted),
            wall_seconds=result.wall_seconds if record_timings else None,
            seed=result.seed,
        )
        return self.write_frame(name, pd.DataFrame([record]))

    def write_trace(self, name: str, records: list[MinistepRecord]) -> Path:
        return self.write_models(name, records, columns=TRACE_COLUMNS)

    def write_results(self, name: str, rows: list[ReplicationRow]) -> Path:
        return self.write_models(name, rows, columns=RESULTS_COLUMNS)

    def write_summaries(self, name: str, summaries: list[CellSummary]) -> Path:
        return self.write_models(name, summaries, columns=list(CellSummary.model_fields))


# ──────────────────────────────────────────────
# Reading artifacts back
# ──────────────────────────────────────────────


def read_header(path: str | Path) -> str | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    return first if first.startswith(HEADER_PREFIX) else None


def read_frame(path: str | Path) -> pd.DataFrame:
    try:
        skip = 1 if read_header(path) is not None else 0
        return pd.read_csv(path, skiprows=skip, keep_default_na=False, na_values=[""])
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e


def _records(frame: pd.DataFrame) -> list[dict[str, Any]]:
    # Blank cells fall back to the model defaults
    return [
        {k: v for k, v in rec.items() if not (isinstance(v, float) and math.isnan(v))}
        for rec in frame.to_dict(orient="records")
    ]


def read_results(path: str | Path) -> list[ReplicationRow]:
    return [ReplicationRow(**rec) for rec in _records(read_frame(path))]


def read_summaries(path: str | Path) -> list[CellSummary]:
    return [CellSummary(**rec) for rec in _records(read_frame(path))]
