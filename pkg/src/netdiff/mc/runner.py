import asyncio
import logging
import time
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict

from netdiff.bsar.gibbs import gibbs_fit
from netdiff.bsar.simulate import simulate_bsar
from netdiff.mc.events import (
    CellCompletedEvent,
    ExperimentCompletedEvent,
    ProgressEvent,
    ReplicationCompletedEvent,
)
from netdiff.mc.seeds import ReplicationSeeds, replication_seeds
from netdiff.models.schemas import (
    BsarParams,
    EffectKind,
    EffectSpec,
    Estimator,
    ExperimentGrid,
    FitConfig,
    GibbsConfig,
    LatentDraw,
    Network,
    ReplicationRow,
    cell_id,
)
from netdiff.network.geometry import generate_random_geometric
from netdiff.saom.estimation import convergence_filter, mom_estimate, wald_significance
from netdiff.saom.problem import build_cross_sectional_problem

logger = logging.getLogger(__name__)

BETA_NAMES = ["const", "x"]
SLOPE_LABEL = "effFrom_x"

_SPATIAL_KIND = {
    Estimator.SAOM_AVSIM: EffectKind.AV_SIM,
    Estimator.SAOM_AVALT: EffectKind.AV_ALT,
}


class ReplicationTask(BaseModel):
    """Everything a worker process needs to run one replication."""

    model_config = ConfigDict(frozen=True)

    rho: float
    n: int
    rep: int
    grid: ExperimentGrid
    gibbs: GibbsConfig
    fit: FitConfig
    record_timings: bool = False


# ──────────────────────────────────────────────
# One replication (runs inside worker processes)
# ──────────────────────────────────────────────


def simulate_replication_data(
    rho: float, n: int, grid: ExperimentGrid, seeds: ReplicationSeeds
) -> tuple[Network, np.ndarray, LatentDraw]:
    """Network, design matrix [1, x] and BSAR outcomes shared by every estimator."""
    net = generate_random_geometric(n, grid.avg_degree, seeds.network)
    x = np.random.default_rng(seeds.covariates).normal(grid.x_mean, grid.x_sd, n)
    X = np.column_stack([np.ones(n), x])
    draw = simulate_bsar(net, X, BsarParams(rho=rho, beta=list(grid.dgp_beta)), seeds.errors)
    return net, X, draw


def _gibbs_row(row: ReplicationRow, net: Network, X: np.ndarray, y: np.ndarray, task: ReplicationTask, seed: int) -> ReplicationRow:
    summary = gibbs_fit(net, X, y, task.gibbs.model_copy(update={"seed": seed}), names=BETA_NAMES)
    rho_at, slope_at = summary.index("rho"), summary.index("x")
    return row.model_copy(
        update={
            "spatial_est": summary.mean[rho_at],
            "spatial_se": summary.sd[rho_at],
            "spatial_sig": summary.significant[rho_at],
            "slope_est": summary.mean[slope_at],
            "slope_se": summary.sd[slope_at],
            "slope_sig": summary.significant[slope_at],
            "converged": True,
            "accepted": True,
        }
    )


def _saom_row(
    row: ReplicationRow,
    net: Network,
    x: np.ndarray,
    y: np.ndarray,
    task: ReplicationTask,
    estimator: Estimator,
    seed: int,
) -> ReplicationRow:
    effects = [
        EffectSpec(kind=_SPATIAL_KIND[estimator]),
        EffectSpec(kind=EffectKind.EFF_FROM, covariate=0, label=SLOPE_LABEL),
    ]
    problem = build_cross_sectional_problem(net, y, x, effects)
    result = mom_estimate(problem, task.fit.model_copy(update={"seed": seed}))
    significant = wald_significance(result, task.gibbs.significance_level)
    spatial_at = problem.spatial_index
    slope_at = [e.label for e in problem.effects].index(SLOPE_LABEL)
    return row.model_copy(
        update={
            "spatial_est": result.theta_hat[spatial_at],
            "spatial_se": result.std_errors[spatial_at],
            "spatial_sig": significant[spatial_at],
            "slope_est": result.theta_hat[slope_at],
            "slope_se": result.std_errors[slope_at],
            "slope_sig": significant[slope_at],
            "converged": result.converged,
            "accepted": convergence_filter(result, spatial_at),
            "t_conv_max": result.t_conv_max,
            "t_conv_spatial": result.t_conv[spatial_at],
            "error": result.message,
        }
    )


def run_replication(task: ReplicationTask) -> list[ReplicationRow]:
    """Simulate one dataset and fit every requested estimator to it.

    Estimator failures become rows with ``failed`` set; nothing is raised.
    """
    seeds = replication_seeds(task.grid.master_seed, task.rho, task.n, task.rep)
    cid = cell_id(task.rho, task.n)
    base = {"cell_id": cid, "rho": task.rho, "n": task.n, "rep": task.rep, "seed": seeds.replication}

    try:
        net, X, draw = simulate_replication_data(task.rho, task.n, task.grid, seeds)
    except Exception as e:
        logger.exception("Data generation failed for %s rep %d", cid, task.rep)
        return [
            ReplicationRow(**base, estimator=est, failed=True, error=f"{type(e).__name__}: {e}")
            for est in task.grid.estimators
        ]

    rows = []
    for estimator in task.grid.estimators:
        row = ReplicationRow(**base, estimator=estimator)
        started = time.perf_counter()
        try:
            if estimator == Estimator.GIBBS:
                row = _gibbs_row(row, net, X, draw.y, task, seeds.gibbs)
            else:
                row = _saom_row(row, net, X[:, 1], draw.y, task, estimator, seeds.saom)
        except Exception as e:
            logger.exception("%s failed for %s rep %d", estimator.value, cid, task.rep)
            row = row.model_copy(update={"failed": True, "error": f"{type(e).__name__}: {e}"})
        if task.record_timings:
            row = row.model_copy(update={"seconds": time.perf_counter() - started})
        rows.append(row)
    return rows


# ──────────────────────────────────────────────
# Orchestration
# ──────────────────────────────────────────────


class ExperimentRunner:
    """Fans replications out over a process pool and reports progress to subscribers."""

    def __init__(
        self,
        grid: ExperimentGrid,
        gibbs: GibbsConfig | None = None,
        fit: FitConfig | None = None,
        workers: int = 1,
        record_timings: bool = False,
    ) -> None:
        self.grid = grid
        self.gibbs = gibbs or GibbsConfig()
        self.fit = fit or FitConfig()
        self.workers = max(1, workers)
        self.record_timings = record_timings
        self._subscribers: list[Callable[[ProgressEvent], None]] = []

    def subscribe(self, callback: Callable[[ProgressEvent], None]) -> None:
        self._subscribers.append(callback)

    def _publish(self, event: ProgressEvent) -> None:
        for callback in self._subscribers:
            try:
                callback(event)
            except Exception:
                logger.exception("Progress subscriber failed on %s", event.event)

    def _task(self, rho: float, n: int, rep: int) -> ReplicationTask:
        return ReplicationTask(
            rho=rho,
            n=n,
            rep=rep,
            grid=self.grid,
            gibbs=self.gibbs,
            fit=self.fit,
            record_timings=self.record_timings,
        )

    async def _run_tasks(
        self, tasks: list[ReplicationTask], pool: ProcessPoolExecutor | None
    ) -> list[list[ReplicationRow]]:
        async def one(task: ReplicationTask) -> list[ReplicationRow]:
            if pool is None:
                rows = run_replication(task)
            else:
                loop = asyncio.get_running_loop()
                rows = await loop.run_in_executor(pool, run_replication, task)
            self._publish(
                ReplicationCompletedEvent.create(
                    cell_id(task.rho, task.n), task.rep, sum(r.failed for r in rows)
                )
            )
            return rows

        if pool is None:
            return [await one(task) for task in tasks]
        # gather keeps task order, so rows come back in (rep, estimator) order
        return await asyncio.gather(*(one(task) for task in tasks))

    async def run_cell(
        self, rho: float, n: int, reps: int | None = None, pool: ProcessPoolExecutor | None = None
    ) -> list[ReplicationRow]:
        reps = self.grid.reps if reps is None else reps
        cid = cell_id(rho, n)
        logger.info("Running cell %s: %d replications x %d estimators", cid, reps, len(self.grid.estimators))

        if pool is None and self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as own_pool:
                batches = await self._run_tasks([self._task(rho, n, r) for r in range(reps)], own_pool)
        else:
            batches = await self._run_tasks([self._task(rho, n, r) for r in range(reps)], pool)

        rows = [row for batch in batches for row in batch]
        self._publish(CellCompletedEvent.create(cid, len(rows), sum(r.failed for r in rows)))
        return rows

    async def run(self) -> list[ReplicationRow]:
        rows: list[ReplicationRow] = []
        cells = self.grid.cells
        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                for rho, n in cells:
                    rows.extend(await self.run_cell(rho, n, pool=pool))
        else:
            for rho, n in cells:
                rows.extend(await self.run_cell(rho, n))
        self._publish(ExperimentCompletedEvent.create(len(cells), len(rows)))
        return rows


def run_cell(
    rho: float,
    n: int,
    reps: int,
    grid: ExperimentGrid,
    gibbs: GibbsConfig | None = None,
    fit: FitConfig | None = None,
    workers: int = 1,
) -> list[ReplicationRow]:
    """Synchronous entry point for a single (rho, n) cell."""
    runner = ExperimentRunner(grid, gibbs=gibbs, fit=fit, workers=workers)
    return asyncio.run(runner.run_cell(rho, n, reps))
