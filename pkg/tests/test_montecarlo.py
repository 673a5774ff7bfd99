"""Tests for the Monte Carlo seed tree, replication runner, progress events and aggregation."""
import math

import pandas as pd
import pytest

from netdiff.mc.aggregate import aggregate, appendix_tables, is_accepted
from netdiff.mc.events import (
    CellCompletedEvent,
    ExperimentCompletedEvent,
    ReplicationCompletedEvent,
)
from netdiff.mc.runner import ExperimentRunner, ReplicationTask, run_cell, run_replication
from netdiff.mc.seeds import child_seed, replication_seeds, rho_key
from netdiff.models.schemas import Estimator, ExperimentGrid, ReplicationRow, cell_id


@pytest.fixture
def tiny_grid() -> ExperimentGrid:
    return ExperimentGrid(
        rho_values=[0.3],
        n_values=[20],
        reps=2,
        avg_degree=4.0,
        estimators=[Estimator.GIBBS, Estimator.SAOM_AVSIM],
        master_seed=7,
    )


def _row(estimator=Estimator.GIBBS, rep=0, spatial=0.0, **extra) -> ReplicationRow:
    return ReplicationRow(
        cell_id=cell_id(0.3, 50),
        rho=0.3,
        n=50,
        rep=rep,
        estimator=estimator,
        spatial_est=spatial,
        slope_est=-1.0,
        seed=rep,
        converged=True,
        **extra,
    )


def _frame(rows: list[ReplicationRow]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in rows])


class TestSeeds:
    def test_rho_key_is_nonnegative(self):
        assert rho_key(-0.8) == 9200
        assert rho_key(0.0) == 10000

    def test_child_seed_is_deterministic(self):
        a = child_seed(2019, 0.3, 250, 4).generate_state(4)
        b = child_seed(2019, 0.3, 250, 4).generate_state(4)
        assert a.tolist() == b.tolist()

    def test_streams_differ_across_reps_and_cells(self):
        seeds = {
            replication_seeds(2019, rho, n, rep).replication
            for rho in (-0.3, 0.0, 0.3)
            for n in (50, 250)
            for rep in range(5)
        }
        assert len(seeds) == 30

    def test_components_differ_within_a_replication(self):
        s = replication_seeds(2019, 0.0, 50, 0)
        assert len({s.network, s.covariates, s.errors, s.gibbs, s.saom}) == 5


class TestEvents:
    def test_replication_completed(self):
        event = ReplicationCompletedEvent.create("rho+0.30_n50", 3, 1)
        assert event.event == "replication_completed"
        assert event.data["cell"] == "rho+0.30_n50"
        assert event.data["rep"] == 3
        assert "timestamp" in event.data

    def test_cell_completed(self):
        event = CellCompletedEvent.create("rho+0.30_n50", 6, 0)
        assert event.event == "cell_completed"
        assert event.data["rows"] == 6

    def test_experiment_completed(self):
        event = ExperimentCompletedEvent.create(2, 12)
        assert event.event == "experiment_completed"
        assert event.data == {"cells": 2, "rows": 12, "timestamp": event.data["timestamp"]}


class TestRunReplication:
    def test_one_row_per_estimator(self, tiny_grid, quick_gibbs, quick_fit):
        task = ReplicationTask(rho=0.3, n=20, rep=0, grid=tiny_grid, gibbs=quick_gibbs, fit=quick_fit)
        rows = run_replication(task)
        assert [r.estimator for r in rows] == [Estimator.GIBBS, Estimator.SAOM_AVSIM]
        assert len({r.seed for r in rows}) == 1
        assert all(r.seconds is None for r in rows)

    def test_failures_become_rows(self, quick_gibbs, quick_fit):
        # A huge intercept makes every outcome 1
        grid = ExperimentGrid(
            rho_values=[0.0],
            n_values=[20],
            reps=1,
            avg_degree=4.0,
            dgp_beta=(100.0, 0.0),
            estimators=[Estimator.GIBBS],
        )
        task = ReplicationTask(rho=0.0, n=20, rep=0, grid=grid, gibbs=quick_gibbs, fit=quick_fit)
        [row] = run_replication(task)
        assert row.failed
        assert row.error.startswith("DegenerateDataError")
        assert not is_accepted(row)

    def test_timings_recorded_on_request(self, tiny_grid, quick_gibbs, quick_fit):
        task = ReplicationTask(
            rho=0.3, n=20, rep=1, grid=tiny_grid, gibbs=quick_gibbs, fit=quick_fit, record_timings=True
        )
        assert all(r.seconds is not None for r in run_replication(task))


class TestRunCell:
    def test_three_reps_three_rows_per_estimator(self, tiny_grid, quick_gibbs, quick_fit):
        rows = run_cell(0.3, 20, 3, tiny_grid, gibbs=quick_gibbs, fit=quick_fit)
        for estimator in tiny_grid.estimators:
            mine = [r for r in rows if r.estimator == estimator]
            assert len(mine) == 3
            assert len({r.seed for r in mine}) == 3
        assert {r.cell_id for r in rows} == {"rho+0.30_n20"}

    def test_repeat_gives_identical_rows(self, tiny_grid, quick_gibbs, quick_fit):
        a = run_cell(0.3, 20, 2, tiny_grid, gibbs=quick_gibbs, fit=quick_fit)
        b = run_cell(0.3, 20, 2, tiny_grid, gibbs=quick_gibbs, fit=quick_fit)
        assert _frame(a).equals(_frame(b))

    async def test_runner_publishes_progress(self, tiny_grid, quick_gibbs, quick_fit):
        events = []
        runner = ExperimentRunner(tiny_grid, gibbs=quick_gibbs, fit=quick_fit)
        runner.subscribe(events.append)
        rows = await runner.run()

        assert len(rows) == tiny_grid.reps * len(tiny_grid.estimators)
        kinds = [e.event for e in events]
        assert kinds.count("replication_completed") == tiny_grid.reps
        assert kinds[-2:] == ["cell_completed", "experiment_completed"]

    async def test_failing_subscriber_does_not_stop_the_run(self, tiny_grid, quick_gibbs, quick_fit):
        def broken(event):
            raise RuntimeError("boom")

        runner = ExperimentRunner(tiny_grid, gibbs=quick_gibbs, fit=quick_fit)
        runner.subscribe(broken)
        rows = await runner.run_cell(0.3, 20, reps=1)
        assert len(rows) == 2


class TestAggregate:
    def test_sample_mean_and_sd(self):
        rows = [_row(rep=k, spatial=float(v)) for k, v in enumerate([1, 2, 3, 4])]
        [summary] = aggregate(rows)
        assert summary.spatial_mean == pytest.approx(2.5)
        assert summary.spatial_sd == pytest.approx(1.2910, abs=1e-4)
        assert summary.n_accepted == 4
        assert summary.convergence_rate == 1.0

    def test_identical_values_have_zero_sd(self):
        [summary] = aggregate([_row(rep=k, spatial=0.7) for k in range(3)])
        assert summary.spatial_mean == pytest.approx(0.7)
        assert summary.spatial_sd == 0.0

    def test_convergence_rule_reapplied_to_saom_rows(self):
        rows = [
            _row(Estimator.SAOM_AVSIM, 0, 1.0, t_conv_max=0.1, t_conv_spatial=0.05),
            _row(Estimator.SAOM_AVSIM, 1, 9.0, t_conv_max=0.3, t_conv_spatial=0.05),
            _row(Estimator.SAOM_AVSIM, 2, 9.0, t_conv_max=0.15, t_conv_spatial=0.15),
            _row(Estimator.SAOM_AVSIM, 3, 3.0, t_conv_max=0.2, t_conv_spatial=-0.1),
        ]
        [summary] = aggregate(rows)
        assert summary.reps == 4
        assert summary.n_accepted == 2
        assert summary.spatial_mean == pytest.approx(2.0)
        assert summary.convergence_rate == 0.5

    def test_empty_accepted_set(self):
        [summary] = aggregate([_row(failed=True), _row(rep=1, failed=True)])
        assert summary.n_accepted == 0
        assert summary.spatial_mean is None
        assert summary.spatial_sd is None
        assert summary.spatial_sig_rate is None

    def test_single_accepted_value_has_no_sd(self):
        [summary] = aggregate([_row(spatial=1.5)])
        assert summary.spatial_sd is None

    def test_significance_proportions(self):
        rows = [_row(rep=k, spatial_sig=k < 1, slope_sig=True) for k in range(4)]
        [summary] = aggregate(rows)
        assert summary.spatial_sig_rate == 0.25
        assert summary.slope_sig_rate == 1.0

    def test_order_of_rows_does_not_matter(self):
        rows = [
            _row(Estimator.SAOM_AVSIM, 0, 2.0, t_conv_max=0.1, t_conv_spatial=0.0),
            _row(Estimator.GIBBS, 0, 0.1),
            _row(Estimator.GIBBS, 1, 0.3),
            _row(Estimator.SAOM_AVSIM, 1, 4.0, t_conv_max=0.1, t_conv_spatial=0.0),
        ]
        forward = [s.model_dump() for s in aggregate(rows)]
        backward = [s.model_dump() for s in aggregate(rows[::-1])]
        assert forward == backward
        assert [s["estimator"] for s in forward] == [Estimator.GIBBS, Estimator.SAOM_AVSIM]

    def test_nan_estimates_are_skipped(self):
        rows = [_row(spatial=1.0), _row(rep=1, spatial=math.nan), _row(rep=2, spatial=3.0)]
        [summary] = aggregate(rows)
        assert summary.spatial_mean == pytest.approx(2.0)


class TestAppendixTables:
    def test_layout(self):
        rows = [
            _row(Estimator.GIBBS, 0, 0.1),
            _row(Estimator.GIBBS, 1, 0.3),
            _row(Estimator.SAOM_AVSIM, 0, 2.0, t_conv_max=0.1, t_conv_spatial=0.0),
            _row(Estimator.SAOM_AVSIM, 1, 4.0, t_conv_max=0.1, t_conv_spatial=0.0),
        ]
        tables = appendix_tables(aggregate(rows))
        assert set(tables) == {"convergence", "spatial", "slope", "significance"}

        spatial = tables["spatial"]
        assert list(spatial.columns) == ["rho", "n", "gibbs_mean", "gibbs_sd", "saom_avsim_mean", "saom_avsim_sd"]
        assert spatial.loc[0, "gibbs_mean"] == pytest.approx(0.2)
        assert spatial.loc[0, "saom_avsim_mean"] == pytest.approx(3.0)
        assert list(tables["convergence"].columns[2:5]) == ["gibbs_reps", "gibbs_accepted", "gibbs_rate"]

    def test_no_summaries(self):
        assert appendix_tables([]) == {}
