"""Tests for CSV artifacts and their provenance header."""
import math

import numpy as np
import pandas as pd
import pytest

from netdiff.models.schemas import (
    CellSummary,
    Estimator,
    FitResult,
    MinistepRecord,
    ReplicationRow,
)
from netdiff.storage import ArtifactError
from netdiff.storage.artifacts import (
    RESULTS_COLUMNS,
    ArtifactStore,
    config_hash,
    read_frame,
    read_header,
    read_results,
    read_summaries,
)


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / "out", digest="ab" * 32, master_seed=2019)


def _lines(path):
    return path.read_text(encoding="utf-8").split("\n")


class TestConfigHash:
    def test_key_order_does_not_matter(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})

    def test_values_matter(self):
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_is_sha256_hex(self):
        digest = config_hash({"a": 1})
        assert len(digest) == 64
        int(digest, 16)


class TestArtifactStore:
    def test_header_first_line(self, store):
        path = store.write_frame("t.csv", pd.DataFrame({"a": [1, 2]}))
        assert _lines(path)[0] == f"# netdiff config_hash={'ab' * 32} master_seed=2019"
        assert read_header(path) == _lines(path)[0]

    def test_results_round_trip(self, store):
        rows = [
            ReplicationRow(
                cell_id="rho+0.30_n50", rho=0.3, n=50, rep=0, estimator=Estimator.GIBBS,
                spatial_est=0.25, spatial_se=0.1, spatial_sig=True, slope_est=-1.1,
                slope_se=0.2, slope_sig=True, converged=True, accepted=True, seed=42,
            ),
            ReplicationRow(
                cell_id="rho+0.30_n50", rho=0.3, n=50, rep=0, estimator=Estimator.SAOM_AVSIM,
                seed=42, failed=True, error="SingularDerivativeError: flat",
            ),
        ]
        path = store.write_results("results.csv", rows)

        assert _lines(path)[1] == ",".join(RESULTS_COLUMNS)
        back = read_results(path)
        assert back[0].spatial_sig is True
        assert back[0].estimator == Estimator.GIBBS
        assert back[0].seconds is None
        assert math.isnan(back[1].spatial_est)
        assert back[1].error == "SingularDerivativeError: flat"

    def test_booleans_written_as_integers(self, store):
        row = ReplicationRow(
            cell_id="c", rho=0.0, n=3, rep=0, estimator=Estimator.GIBBS, seed=1, converged=True
        )
        path = store.write_results("results.csv", [row])
        values = dict(zip(_lines(path)[1].split(","), _lines(path)[2].split(",")))
        assert values["converged"] == "1"
        assert values["failed"] == "0"
        assert values["spatial_est"] == ""
        assert values["estimator"] == "gibbs"

    def test_summaries_round_trip(self, store):
        summaries = [
            CellSummary(rho=0.3, n=50, estimator=Estimator.GIBBS, reps=4, n_accepted=4,
                        convergence_rate=1.0, spatial_mean=0.2, spatial_sd=0.05),
            CellSummary(rho=0.3, n=50, estimator=Estimator.SAOM_AVSIM, reps=4, n_accepted=0,
                        convergence_rate=0.0),
        ]
        path = store.write_summaries("summary.csv", summaries)
        assert read_summaries(path) == summaries

    def test_fit_columns(self, store):
        result = FitResult(
            effect_labels=["avSim", "effFrom_x"],
            theta_hat=[1.5, -2.0],
            std_errors=[0.5, 0.4],
            t_conv=[0.05, -0.1],
            t_conv_max=0.1,
            converged=True,
            wall_seconds=3.2,
            seed=9,
        )
        path = store.write_fit("fit.csv", result, accepted=True, significant=[True, True])
        frame = read_frame(path)
        assert frame.loc[0, "theta_avSim"] == 1.5
        assert frame.loc[0, "sig_effFrom_x"] == 1
        assert frame.loc[0, "accepted"] == 1
        assert np.isnan(frame.loc[0, "wall_seconds"])

    def test_trace_columns(self, store):
        record = MinistepRecord(
            index=0, time=0.1, actor=2, option="toggle",
            objective_stay=0.0, objective_toggle=1.0, probability=0.73,
        )
        frame = read_frame(store.write_trace("trace.csv", [record]))
        assert list(frame.columns) == [
            "index", "time", "actor", "option", "objective_stay", "objective_toggle", "probability"
        ]
        assert frame.loc[0, "option"] == "toggle"

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        store = ArtifactStore(blocker / "out", digest="0" * 64, master_seed=1)
        with pytest.raises(ArtifactError):
            store.write_results("results.csv", [])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactError):
            read_frame(tmp_path / "nope.csv")
