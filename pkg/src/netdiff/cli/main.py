"""Command-line entry point: ``netdiff <command> --config run.json``."""

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from netdiff import (
    ConfigError,
    DataValidationError,
    InvalidArgumentError,
    NumericFailureError,
    ParseError,
)
from netdiff.bsar import DegenerateDataError, DivergingCoefficientsError
from netdiff.bsar.gibbs import gibbs_fit
from netdiff.bsar.probit import probit_fit
from netdiff.bsar.simulate import simulate_bsar
from netdiff.config import settings
from netdiff.mc.aggregate import aggregate, appendix_tables
from netdiff.mc.events import ProgressEvent
from netdiff.mc.runner import ExperimentRunner
from netdiff.models.run_config import RunConfig
from netdiff.models.schemas import BsarParams
from netdiff.network.geometry import generate_random_geometric
from netdiff.network.io import read_network
from netdiff.saom import SingularDerivativeError
from netdiff.saom.estimation import convergence_filter, mom_estimate, wald_significance
from netdiff.saom.ministep import simulate_period
from netdiff.saom.problem import build_cross_sectional_problem, build_panel_problem
from netdiff.services.panel import load_cross_section, load_panel
from netdiff.services.report import render_report
from netdiff.storage import ArtifactError
from netdiff.storage.artifacts import ArtifactStore, config_hash, read_summaries

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

COMMANDS = ("generate", "simulate", "fit-gibbs", "fit-probit", "fit-saom", "montecarlo", "report")

_CONFIG_FAULTS = (
    ValidationError,
    json.JSONDecodeError,
    ConfigError,
    DataValidationError,
    ParseError,
    InvalidArgumentError,
    DegenerateDataError,
    ArtifactError,
)
_NUMERIC_FAULTS = (NumericFailureError, SingularDerivativeError, DivergingCoefficientsError)


# ──────────────────────────────────────────────
# Configuration
# ──────────────────────────────────────────────


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return RunConfig.model_validate(json.loads(text))


def apply_overrides(config: RunConfig, seed: int | None) -> RunConfig:
    """--seed replaces every seed in the document; the grid always follows master_seed."""
    if seed is not None:
        update: dict[str, object] = {"master_seed": seed}
        if config.generate:
            update["generate"] = config.generate.model_copy(update={"seed": seed})
        if config.simulate:
            update["simulate"] = config.simulate.model_copy(update={"seed": seed})
        if config.fit_gibbs:
            gibbs = config.fit_gibbs.gibbs.model_copy(update={"seed": seed})
            update["fit_gibbs"] = config.fit_gibbs.model_copy(update={"gibbs": gibbs})
        if config.fit_saom:
            fit = config.fit_saom.fit.model_copy(update={"seed": seed})
            update["fit_saom"] = config.fit_saom.model_copy(update={"fit": fit})
        config = config.model_copy(update=update)
    if config.montecarlo:
        grid = config.montecarlo.grid.model_copy(update={"master_seed": config.master_seed})
        config = config.model_copy(
            update={"montecarlo": config.montecarlo.model_copy(update={"grid": grid})}
        )
    # Round-trip so every nested default is validated and materialized
    return RunConfig.model_validate(config.model_dump())


def _section(config: RunConfig, command: str):
    section = getattr(config, command.replace("-", "_"))
    if section is None:
        raise ConfigError(f"config has no '{command.replace('-', '_')}' section")
    return section


# ──────────────────────────────────────────────
# Commands
# ──────────────────────────────────────────────


def cmd_generate(config: RunConfig, store: ArtifactStore, workers: int) -> None:
    section = _section(config, "generate")
    net = generate_random_geometric(section.n, section.avg_degree, section.seed)
    store.write_network(section.output, net)


def cmd_simulate(config: RunConfig, store: ArtifactStore, workers: int) -> None:
    section = _section(config, "simulate")
    network_seed, covariate_seed, error_seed = (
        int(s) for s in np.random.SeedSequence(section.seed).generate_state(3)
    )
    if section.network is not None:
        net = read_network(section.network)
    else:
        net = generate_random_geometric(section.n, section.avg_degree, network_seed)
        store.write_network(section.network_output, net)

    k = len(section.beta)
    covariates = np.random.default_rng(covariate_seed).normal(
        section.x_mean, section.x_sd, (net.n, k - 1)
    )
    X = np.column_stack([np.ones(net.n), covariates])
    names = ["const"] + (["x"] if k == 2 else [f"x{j}" for j in range(1, k)])
    draw = simulate_bsar(net, X, BsarParams(rho=section.rho, beta=section.beta), error_seed)
    store.write_dataset(section.output, X, draw, names)


def cmd_fit_gibbs(config: RunConfig, store: ArtifactStore, workers: int) -> None:
    section = _section(config, "fit-gibbs")
    net, X, y, names = load_cross_section(section.data)
    summary = gibbs_fit(net, X, y, section.gibbs, names=names)
    store.write_posterior(section.output, summary)


def cmd_fit_probit(config: RunConfig, store: ArtifactStore, workers: int) -> None:
    section = _section(config, "fit-probit")
    _, X, y, names = load_cross_section(section.data)
    result = probit_fit(X, y, names=names, significance_level=section.significance_level)
    store.write_probit(section.output, result)


def cmd_fit_saom(config: RunConfig, store: ArtifactStore, workers: int) -> None:
    section = _section(config, "fit-saom")
    if section.mode == "panel":
        panel = load_panel(section.data)
        problem = build_panel_problem(
            panel.network, list(panel.outcomes), list(panel.covariates), section.effects
        )
    else:
        # The objective has no intercept; linearShape plays that role in panel mode
        source = section.data.model_copy(update={"add_intercept": False})
        net, X, y, _ = load_cross_section(source)
        problem = build_cross_sectional_problem(net, y, X, section.effects)

    result = mom_estimate(problem, section.fit)
    accepted = convergence_filter(result, problem.spatial_index)
    significant = wald_significance(result, section.significance_level)
    store.write_fit(
        section.output,
        result,
        accepted,
        significant=significant,
        record_timings=section.record_timings,
    )

    if section.trace_at_estimate:
        state = simulate_period(
            problem.network,
            problem.waves[0],
            problem.effects,
            result.theta_hat,
            problem.behaviour_rate,
            problem.covariates[0],
            problem.mean_sim,
            seed=section.fit.seed,
            trace=True,
            mean_behaviour=problem.mean_behaviour,
        )
        store.write_trace(section.trace_output, state.trace or [])


def _log_progress(event: ProgressEvent) -> None:
    if event.event == "replication_completed":
        logger.debug("Replication %s/%d done", event.data["cell"], event.data["rep"])
    else:
        logger.info("%s: %s", event.event, {k: v for k, v in event.data.items() if k != "timestamp"})


def cmd_montecarlo(config: RunConfig, store: ArtifactStore, workers: int) -> None:
    section = _section(config, "montecarlo")
    runner = ExperimentRunner(
        section.grid,
        gibbs=section.gibbs,
        fit=section.fit,
        workers=workers,
        record_timings=section.record_timings,
    )
    runner.subscribe(_log_progress)
    rows = asyncio.run(runner.run())
    store.write_results(section.results_output, rows)

    summaries = aggregate(rows)
    store.write_summaries(section.summary_output, summaries)
    for name, table in appendix_tables(summaries).items():
        store.write_frame(f"table_{name}.csv", table)


def cmd_report(config: RunConfig, store: ArtifactStore, workers: int) -> None:
    section = _section(config, "report")
    summaries = read_summaries(section.summary)
    render_report(summaries, store.out_dir, store.header, prefix=section.prefix)


HANDLERS: dict[str, Callable[[RunConfig, ArtifactStore, int], None]] = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "fit-gibbs": cmd_fit_gibbs,
    "fit-probit": cmd_fit_probit,
    "fit-saom": cmd_fit_saom,
    "montecarlo": cmd_montecarlo,
    "report": cmd_report,
}


# ──────────────────────────────────────────────
# Entry point
# ──────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netdiff",
        description="Simulate and estimate diffusion of binary outcomes on networks.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--workers", type=int, default=None, help="worker processes")
    parser.add_argument("--seed", type=int, default=None, help="overrides every seed in the config")
    parser.add_argument("--out", default=None, help="output directory")
    return parser


def _fail(kind: str, exc: BaseException, code: int) -> int:
    message = " ".join(str(exc).split())
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        if args.seed is not None and args.seed < 0:
            raise ConfigError(f"--seed must be >= 0, got {args.seed}")
        config = apply_overrides(load_config(args.config), args.seed)
        workers = args.workers or config.workers or settings.workers
        out_dir = args.out or config.out_dir or settings.out_dir
        logger.info("Effective config: %s", config.model_dump_json(exclude_none=True))

        # Worker count and output location never change results, so they stay out of the hash
        digest = config_hash(config.model_dump(mode="json", exclude={"workers", "out_dir"}))
        store = ArtifactStore(out_dir, digest, config.master_seed)
        HANDLERS[args.command](config, store, workers)
    except _NUMERIC_FAULTS as e:
        logger.error("%s failed: %s", args.command, e)
        return _fail(type(e).__name__, e, EXIT_NUMERIC)
    except _CONFIG_FAULTS as e:
        logger.error("%s rejected: %s", args.command, e)
        return _fail(type(e).__name__, e, EXIT_CONFIG)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
