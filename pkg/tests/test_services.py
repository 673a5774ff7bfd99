"""Tests for panel ingest, cross-section loading and SVG reports."""
import numpy as np
import pytest

from netdiff import DataValidationError
from netdiff.models.run_config import NodeTableSource, PanelSource
from netdiff.models.schemas import CellSummary, Estimator
from netdiff.network.io import write_network
from netdiff.services.panel import (
    ingest_panel,
    load_cross_section,
    load_panel,
    mean_impute,
)
from netdiff.services.report import render_report

OUTCOMES = """unit,wave,y
A,1,0
A,2,1
A,3,1
B,1,1
B,2,1
B,3,0
C,1,0
C,2,0
C,3,1
"""

COVARIATES = """unit,wave,gdp
A,1,1.0
A,2,
A,3,3.0
B,1,
B,2,
B,3,
C,1,4.0
C,2,5.0
C,3,6.0
"""


@pytest.fixture
def panel_files(tmp_path):
    (tmp_path / "outcomes.csv").write_text(OUTCOMES)
    (tmp_path / "covariates.csv").write_text(COVARIATES)
    (tmp_path / "edges.csv").write_text("from,to\nA,B\nB,C\n")
    return tmp_path


def _source(root, **overrides) -> PanelSource:
    fields = {
        "outcomes": root / "outcomes.csv",
        "covariates": root / "covariates.csv",
        "proximity": root / "edges.csv",
    }
    return PanelSource(**{**fields, **overrides})


class TestIngestPanel:
    def test_shape_and_order(self, panel_files):
        panel = ingest_panel(_source(panel_files))
        assert panel.unit_ids == ["A", "B", "C"]
        assert panel.wave_labels == ["1", "2", "3"]
        np.testing.assert_array_equal(panel.outcomes[:, 0], [0, 1, 1])
        assert panel.network.edge_count == 2

    def test_interior_gap_interpolated(self, panel_files):
        panel = ingest_panel(_source(panel_files))
        np.testing.assert_allclose(panel.covariates[:, 0, 0], [1.0, 2.0, 3.0])

    def test_uneven_waves_interpolated_by_label(self, panel_files):
        (panel_files / "outcomes.csv").write_text(OUTCOMES.replace(",3,", ",5,"))
        (panel_files / "covariates.csv").write_text(COVARIATES.replace(",3,", ",5,"))
        panel = ingest_panel(_source(panel_files))
        assert panel.wave_labels == ["1", "2", "5"]
        np.testing.assert_allclose(panel.covariates[:, 0, 0], [1.0, 1.5, 3.0])

    def test_waves_ordered_numerically(self, panel_files):
        (panel_files / "outcomes.csv").write_text(OUTCOMES.replace(",3,", ",10,"))
        (panel_files / "covariates.csv").write_text(COVARIATES.replace(",3,", ",10,"))
        panel = ingest_panel(_source(panel_files))
        assert panel.wave_labels == ["1", "2", "10"]

    def test_unit_without_values_gets_overall_mean(self, panel_files):
        panel = ingest_panel(_source(panel_files))
        np.testing.assert_allclose(panel.covariates[:, 1, 0], [3.8, 3.8, 3.8])

    def test_missing_outcome_lists_unit_and_wave(self, panel_files):
        (panel_files / "outcomes.csv").write_text(OUTCOMES.replace("B,2,1\n", ""))
        with pytest.raises(DataValidationError, match=r"\(B, 2\)"):
            ingest_panel(_source(panel_files))

    def test_non_binary_outcome(self, panel_files):
        (panel_files / "outcomes.csv").write_text(OUTCOMES.replace("C,3,1", "C,3,2"))
        with pytest.raises(DataValidationError, match="0 or 1"):
            ingest_panel(_source(panel_files))

    def test_non_numeric_outcome_names_the_row(self, panel_files):
        (panel_files / "outcomes.csv").write_text(OUTCOMES.replace("C,3,1", "C,3,yes"))
        with pytest.raises(DataValidationError, match=r"non-numeric 'y' values at \(C, 3\)"):
            ingest_panel(_source(panel_files))

    def test_non_numeric_covariate(self, panel_files):
        (panel_files / "covariates.csv").write_text(COVARIATES.replace("C,2,5.0", "C,2,high"))
        with pytest.raises(DataValidationError, match="non-numeric 'gdp'"):
            ingest_panel(_source(panel_files))

    def test_duplicate_outcome_rows(self, panel_files):
        (panel_files / "outcomes.csv").write_text(OUTCOMES + "A,1,1\n")
        with pytest.raises(DataValidationError, match="duplicate"):
            ingest_panel(_source(panel_files))

    def test_unit_ids_must_agree(self, panel_files):
        (panel_files / "covariates.csv").write_text(COVARIATES + "D,1,2.0\n")
        with pytest.raises(DataValidationError, match="unit ids differ"):
            ingest_panel(_source(panel_files))

    def test_unknown_unit_in_edge_list(self, panel_files):
        (panel_files / "edges.csv").write_text("A,B\nB,Z\n")
        with pytest.raises(DataValidationError, match="unknown unit ids"):
            ingest_panel(_source(panel_files))

    def test_distance_matrix_thresholded(self, panel_files):
        (panel_files / "dist.csv").write_text(",A,B,C\nA,0,1,5\nB,1,0,2\nC,5,2,0\n")
        source = _source(
            panel_files,
            proximity=panel_files / "dist.csv",
            proximity_format="distance",
            distance_threshold=2.0,
        )
        panel = ingest_panel(source)
        np.testing.assert_array_equal(panel.network.adjacency, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        np.testing.assert_array_equal(panel.network.weights[1], [0.5, 0.0, 0.5])

    def test_distance_matrix_needs_threshold(self, panel_files):
        with pytest.raises(ValueError, match="distance_threshold"):
            _source(panel_files, proximity_format="distance")

    def test_asymmetric_distances(self, panel_files):
        (panel_files / "dist.csv").write_text(",A,B,C\nA,0,1,5\nB,3,0,2\nC,5,2,0\n")
        source = _source(
            panel_files,
            proximity=panel_files / "dist.csv",
            proximity_format="distance",
            distance_threshold=2.0,
        )
        with pytest.raises(DataValidationError, match="symmetric"):
            ingest_panel(source)

    def test_missing_file(self, panel_files):
        with pytest.raises(DataValidationError, match="cannot read"):
            ingest_panel(_source(panel_files, outcomes=panel_files / "absent.csv"))


class TestCrossSections:
    def test_last_wave_with_intercept(self, panel_files):
        net, X, y, names = load_cross_section(_source(panel_files))
        assert names == ["const", "gdp"]
        np.testing.assert_array_equal(y, [1, 0, 1])
        np.testing.assert_allclose(X[:, 0], 1.0)
        np.testing.assert_allclose(X[:, 1], [3.0, 3.8, 6.0])
        assert net.n == 3

    def test_named_wave(self, panel_files):
        _, _, y, _ = load_cross_section(_source(panel_files, wave="1"))
        np.testing.assert_array_equal(y, [0, 1, 0])

    def test_unknown_wave(self, panel_files):
        with pytest.raises(DataValidationError, match="wave '9'"):
            load_cross_section(_source(panel_files, wave="9"))

    def test_node_table_skips_provenance_line(self, tmp_path, path3):
        write_network(tmp_path / "net.txt", path3)
        (tmp_path / "nodes.csv").write_text(
            "# netdiff config_hash=00 master_seed=1\nnode,const,x,y\n0,1,0.5,1\n1,1,,0\n2,1,1.5,1\n"
        )
        source = NodeTableSource(network=tmp_path / "net.txt", table=tmp_path / "nodes.csv")
        _, X, y, names = load_cross_section(source)
        assert names == ["const", "x"]
        np.testing.assert_allclose(X[:, 1], [0.5, 1.0, 1.5])
        np.testing.assert_array_equal(y, [1, 0, 1])

    def test_node_table_row_count(self, tmp_path, path3):
        write_network(tmp_path / "net.txt", path3)
        (tmp_path / "nodes.csv").write_text("const,x,y\n1,0.5,1\n1,1.5,0\n")
        source = NodeTableSource(network=tmp_path / "net.txt", table=tmp_path / "nodes.csv")
        with pytest.raises(DataValidationError, match="2 rows for 3 nodes"):
            load_cross_section(source)

    def test_load_panel_requires_panel_source(self, tmp_path):
        source = NodeTableSource(network=tmp_path / "n.txt", table=tmp_path / "t.csv")
        with pytest.raises(DataValidationError):
            load_panel(source)

    def test_mean_impute_columns(self):
        X = np.array([[1.0, np.nan], [3.0, 4.0], [np.nan, 8.0]])
        np.testing.assert_allclose(mean_impute(X), [[1.0, 6.0], [3.0, 4.0], [2.0, 8.0]])


def _summaries() -> list[CellSummary]:
    out = []
    for rho, spatial in ((-0.3, -0.4), (0.0, 0.05), (0.3, 0.6)):
        out.append(
            CellSummary(
                rho=rho, n=50, estimator=Estimator.GIBBS, reps=4, n_accepted=4,
                convergence_rate=1.0, spatial_mean=spatial / 4, spatial_sd=0.05,
                slope_mean=-1.1, slope_sd=0.1, spatial_sig_rate=0.25, slope_sig_rate=1.0,
            )
        )
        out.append(
            CellSummary(
                rho=rho, n=50, estimator=Estimator.SAOM_AVSIM, reps=4, n_accepted=3,
                convergence_rate=0.75, spatial_mean=spatial * 5, spatial_sd=0.5,
                slope_mean=-2.0, slope_sd=0.2, spatial_sig_rate=0.0, slope_sig_rate=1.0,
            )
        )
    return out


class TestReport:
    def test_five_figures(self, tmp_path):
        paths = render_report(_summaries(), tmp_path, "# netdiff config_hash=00 master_seed=1")
        assert [p.name for p in paths] == [
            "figure_convergence.svg",
            "figure_spatial.svg",
            "figure_slope.svg",
            "figure_spatial_significance.svg",
            "figure_slope_significance.svg",
        ]
        assert all(p.read_text().lstrip().startswith("<?xml") for p in paths)

    def test_bytes_are_deterministic(self, tmp_path):
        first = render_report(_summaries(), tmp_path / "a", "header")
        second = render_report(_summaries(), tmp_path / "b", "header")
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()

    def test_empty_summaries(self, tmp_path):
        assert render_report([], tmp_path, "header") == []
