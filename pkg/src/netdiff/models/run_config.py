"""The JSON run configuration: one optional section per command."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Discriminator, Field, Tag, model_validator

from netdiff.models.schemas import (
    EffectSpec,
    ExperimentGrid,
    FitConfig,
    GibbsConfig,
)

_STRICT = ConfigDict(extra="forbid")


# ──────────────────────────────────────────────
# Data sources
# ──────────────────────────────────────────────


class NodeTableSource(BaseModel):
    """A network file plus a node table (one row per node, in node order)."""

    model_config = _STRICT

    kind: Literal["nodes"] = "nodes"
    network: Path
    table: Path
    y_column: str = "y"
    x_columns: list[str] = Field(default=["const", "x"], min_length=1)
    add_intercept: bool = False


class PanelSource(BaseModel):
    """Long-format outcome and covariate CSVs plus a proximity file."""

    model_config = _STRICT

    kind: Literal["panel"] = "panel"
    outcomes: Path
    covariates: Path
    proximity: Path
    proximity_format: Literal["edge_list", "network", "distance"] = "edge_list"
    # Required for dense distance matrices; pairs at or below it are tied
    distance_threshold: float | None = Field(default=None, gt=0.0)
    unit_column: str = "unit"
    wave_column: str = "wave"
    outcome_column: str = "y"
    covariate_columns: list[str] | None = None
    # Cross-sectional commands use this wave; None means the last one
    wave: str | None = None
    add_intercept: bool = True

    @model_validator(mode="after")
    def _threshold_for_distances(self) -> PanelSource:
        if self.proximity_format == "distance" and self.distance_threshold is None:
            raise ValueError("distance_threshold is required for a dense distance matrix")
        return self


def _source_kind(value: Any) -> str:
    # "kind" may be omitted; a panel source is recognised by its outcomes file
    if isinstance(value, dict):
        return value.get("kind") or ("panel" if "outcomes" in value else "nodes")
    return getattr(value, "kind", "nodes")


DataSource = Annotated[
    Union[Annotated[NodeTableSource, Tag("nodes")], Annotated[PanelSource, Tag("panel")]],
    Discriminator(_source_kind),
]


# ──────────────────────────────────────────────
# Command sections
# ──────────────────────────────────────────────


class GenerateSection(BaseModel):
    model_config = _STRICT

    n: int = Field(default=250, ge=1)
    avg_degree: float = Field(default=5.0, gt=0.0)
    seed: int = Field(default=0, ge=0)
    output: str = "network.txt"


class SimulateSection(BaseModel):
    model_config = _STRICT

    # None means generate a fresh random geometric network
    network: Path | None = None
    n: int = Field(default=250, ge=1)
    avg_degree: float = Field(default=5.0, gt=0.0)
    rho: float = 0.0
    beta: list[float] = Field(default=[4.0, -2.0], min_length=1)
    x_mean: float = 2.0
    x_sd: float = Field(default=2.0, gt=0.0)
    seed: int = Field(default=0, ge=0)
    output: str = "dataset.csv"
    network_output: str = "network.txt"


class FitGibbsSection(BaseModel):
    model_config = _STRICT

    data: DataSource
    gibbs: GibbsConfig = GibbsConfig()
    output: str = "posterior.csv"


class FitProbitSection(BaseModel):
    model_config = _STRICT

    data: DataSource
    significance_level: float = Field(default=0.05, gt=0.0, lt=1.0)
    output: str = "probit.csv"


class FitSaomSection(BaseModel):
    model_config = _STRICT

    data: DataSource
    mode: Literal["cross_sectional", "panel"] = "cross_sectional"
    effects: list[EffectSpec] = Field(min_length=1)
    fit: FitConfig = FitConfig()
    significance_level: float = Field(default=0.05, gt=0.0, lt=1.0)
    trace_at_estimate: bool = False
    record_timings: bool = False
    output: str = "saom_fit.csv"
    trace_output: str = "ministep_trace.csv"

    @model_validator(mode="after")
    def _panel_needs_panel_data(self) -> FitSaomSection:
        if self.mode == "panel" and self.data.kind != "panel":
            raise ValueError("panel mode needs a panel data source")
        return self


class MonteCarloSection(BaseModel):
    model_config = _STRICT

    grid: ExperimentGrid = ExperimentGrid()
    gibbs: GibbsConfig = GibbsConfig()
    fit: FitConfig = FitConfig()
    record_timings: bool = False
    results_output: str = "results.csv"
    summary_output: str = "summary.csv"


class ReportSection(BaseModel):
    model_config = _STRICT

    summary: Path
    prefix: str = "figure"


class RunConfig(BaseModel):
    model_config = _STRICT

    master_seed: int = Field(default=2019, ge=0)
    workers: int | None = Field(default=None, ge=1)
    out_dir: str | None = None
    generate: GenerateSection | None = None
    simulate: SimulateSection | None = None
    fit_gibbs: FitGibbsSection | None = None
    fit_probit: FitProbitSection | None = None
    fit_saom: FitSaomSection | None = None
    montecarlo: MonteCarloSection | None = None
    report: ReportSection | None = None
