"""Static SVG figures drawn from aggregated summaries.

Nothing is computed here beyond arranging values that aggregation already
produced. Output bytes depend only on the input summaries and header.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from netdiff.models.schemas import CellSummary  # noqa: E402
from netdiff.storage import ArtifactError  # noqa: E402

logger = logging.getLogger(__name__)

_STYLE = {
    "svg.hashsalt": "netdiff",
    "svg.fonttype": "path",
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
}


def _frame(summaries: list[CellSummary]) -> pd.DataFrame:
    frame = pd.DataFrame([s.model_dump(mode="json") for s in summaries])
    return frame.sort_values(["estimator", "n", "rho"]).reset_index(drop=True)


def _save(fig: plt.Figure, path: Path, description: str) -> Path:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": description})
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def _series(frame: pd.DataFrame):
    for (estimator, n), group in frame.groupby(["estimator", "n"], sort=True):
        yield f"{estimator}, n={n}", group


def convergence_figure(frame: pd.DataFrame, path: Path, description: str) -> Path:
    """Grouped bars of accepted-replication rates per rho."""
    rhos = sorted(frame["rho"].unique())
    series = list(_series(frame))
    width = 0.8 / max(len(series), 1)
    fig, ax = plt.subplots()
    for k, (label, group) in enumerate(series):
        rates = group.set_index("rho").reindex(rhos)["convergence_rate"]
        positions = [p + k * width for p in range(len(rhos))]
        ax.bar(positions, rates.fillna(0.0), width=width, label=label)
    ax.set_xticks([p + 0.4 - width / 2 for p in range(len(rhos))])
    ax.set_xticklabels([f"{r:+.1f}" for r in rhos])
    ax.set_xlabel("rho")
    ax.set_ylabel("share of accepted replications")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower right")
    return _save(fig, path, description)


def estimate_figure(
    frame: pd.DataFrame, path: Path, description: str, column: str, ylabel: str
) -> Path:
    """Mean estimate per rho with +-1 sd error bars."""
    fig, ax = plt.subplots()
    for label, group in _series(frame):
        group = group.dropna(subset=[f"{column}_mean"])
        if group.empty:
            continue
        ax.errorbar(
            group["rho"],
            group[f"{column}_mean"],
            yerr=group[f"{column}_sd"].fillna(0.0),
            marker="o",
            capsize=3,
            label=label,
        )
    ax.set_xlabel("rho")
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path, description)


def significance_figure(
    frame: pd.DataFrame, path: Path, description: str, column: str, ylabel: str
) -> Path:
    fig, ax = plt.subplots()
    for label, group in _series(frame):
        group = group.dropna(subset=[column])
        if group.empty:
            continue
        ax.plot(group["rho"], group[column], marker="o", label=label)
    ax.axhline(0.05, color="grey", linestyle="--", linewidth=0.8)
    ax.set_xlabel("rho")
    ax.set_ylabel(ylabel)
    ax.set_ylim(0, 1.05)
    ax.legend()
    return _save(fig, path, description)


def render_report(
    summaries: list[CellSummary], out_dir: str | Path, description: str, prefix: str = "figure"
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame = _frame(summaries)
    if frame.empty:
        logger.warning("No summaries to plot")
        return []

    with plt.rc_context(_STYLE):
        return [
            convergence_figure(frame, out_dir / f"{prefix}_convergence.svg", description),
            estimate_figure(
                frame, out_dir / f"{prefix}_spatial.svg", description, "spatial", "spatial estimate"
            ),
            estimate_figure(
                frame, out_dir / f"{prefix}_slope.svg", description, "slope", "slope estimate"
            ),
            significance_figure(
                frame,
                out_dir / f"{prefix}_spatial_significance.svg",
                description,
                "spatial_sig_rate",
                "share of significant spatial tests",
            ),
            significance_figure(
                frame,
                out_dir / f"{prefix}_slope_significance.svg",
                description,
                "slope_sig_rate",
                "share of significant slope tests",
            ),
        ]
