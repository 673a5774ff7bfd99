"""Method-of-moments estimation of behaviour parameters by stochastic approximation.

Phase 1 estimates the derivative matrix D of the expected target statistics
at theta = 0 by finite differences with common random numbers. Phase 2 runs
Robbins-Monro updates theta <- theta - a D^-1 (S_sim - S_obs) in sub-phases of
growing length and shrinking gain. Phase 3 simulates at the estimate to get
convergence t-ratios and the sandwich covariance D^-1 Sigma D^-T.
"""

import logging
import math
import time

import numpy as np
from scipy import linalg
from scipy.stats import norm
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
)

from netdiff.models.schemas import FitConfig, FitResult, SaomProblem
from netdiff.saom import SingularDerivativeError
from netdiff.saom.effects import target_statistics
from netdiff.saom.ministep import BehaviourSimulator

logger = logging.getLogger(__name__)

MAX_T_CONV = 0.2
MAX_T_CONV_SPATIAL = 0.1

_CONDITION_LIMIT = 1e12

# Phase keys feed the seed tree so every phase draws its own streams
_PHASE1, _PHASE2, _PHASE3 = 1, 2, 3

# A singular D gets one more try with the perturbation doubled
_DERIVATIVE_RETRY_POLICY = dict(
    stop=stop_after_attempt(2),
    retry=retry_if_exception_type(SingularDerivativeError),
    before_sleep=before_sleep_log(logger, logging.WARNING),
    reraise=True,
)


class _WallCapExceeded(Exception):
    pass


class _WallClock:
    def __init__(self, limit: float) -> None:
        self.limit = limit
        self.started = time.monotonic()

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started

    def check(self) -> None:
        if self.elapsed > self.limit:
            raise _WallCapExceeded


def _simulation_seed(seed: int, phase: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(phase, rep))


# ──────────────────────────────────────────────
# Moment function
# ──────────────────────────────────────────────


class MomentFunction:
    """Simulated target statistics summed over the periods of a problem."""

    def __init__(self, problem: SaomProblem) -> None:
        self.problem = problem
        self.n_params = len(problem.effects)
        zeros = np.zeros(self.n_params)
        self._periods = [
            (
                BehaviourSimulator(
                    problem.network,
                    problem.effects,
                    zeros,
                    problem.covariates[t],
                    problem.mean_sim,
                    problem.mean_behaviour,
                ),
                problem.waves[t],
                problem.covariates[t],
            )
            for t in range(problem.n_periods)
        ]
        self.observed = sum(
            target_statistics(
                problem.network,
                problem.waves[t + 1],
                problem.effects,
                problem.covariates[t],
                problem.mean_sim,
                problem.mean_behaviour,
            )
            for t in range(problem.n_periods)
        )

    def simulate(self, theta: np.ndarray, seed: np.random.SeedSequence) -> np.ndarray:
        p = self.problem
        total = np.zeros(self.n_params)
        for t, (simulator, start, covariates) in enumerate(self._periods):
            period_seed = np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, t))
            state = simulator.with_theta(theta).simulate(start, p.behaviour_rate, period_seed)
            total += target_statistics(
                p.network, state.y, p.effects, covariates, p.mean_sim, p.mean_behaviour
            )
        return total


def _check_derivative(D: np.ndarray, step: float) -> None:
    if not np.all(np.isfinite(D)):
        raise SingularDerivativeError(f"derivative matrix has non-finite entries (h={step}): {D.tolist()}")
    condition = np.linalg.cond(D)
    if not condition < _CONDITION_LIMIT:
        raise SingularDerivativeError(
            f"derivative matrix is singular (h={step}, condition number {condition:.3g}): {D.tolist()}"
        )


def estimate_derivative(
    moments: MomentFunction,
    theta: np.ndarray,
    reps: int,
    step: float,
    seed: int,
    phase: int,
    clock: _WallClock | None = None,
    base: np.ndarray | None = None,
) -> np.ndarray:
    """Forward differences dE[S_j]/dtheta_k, each arm sharing the base run's random numbers."""
    p = moments.n_params
    totals = np.zeros((p, p))
    for r in range(reps):
        if clock is not None:
            clock.check()
        rep_seed = _simulation_seed(seed, phase, r)
        s0 = base[r] if base is not None else moments.simulate(theta, rep_seed)
        for k in range(p):
            shifted = theta.copy()
            shifted[k] += step
            totals[:, k] += moments.simulate(shifted, rep_seed) - s0
    D = totals / (reps * step)
    _check_derivative(D, step)
    return D


# ──────────────────────────────────────────────
# Estimation
# ──────────────────────────────────────────────


def _phase1(moments: MomentFunction, cfg: FitConfig, clock: _WallClock) -> np.ndarray:
    theta = np.zeros(moments.n_params)
    reps = cfg.phase1_reps_for(moments.n_params)
    for attempt in Retrying(**_DERIVATIVE_RETRY_POLICY):
        with attempt:
            step = cfg.derivative_step * 2 ** (attempt.retry_state.attempt_number - 1)
            return estimate_derivative(moments, theta, reps, step, cfg.seed, _PHASE1, clock)
    raise AssertionError("unreachable")


def _phase2(
    moments: MomentFunction, D: np.ndarray, cfg: FitConfig, clock: _WallClock, theta: np.ndarray
) -> np.ndarray:
    D_inv = linalg.inv(D)
    counter = 0
    for subphase in range(cfg.phase2_subphases):
        gain = cfg.phase2_gain(subphase)
        iterations = cfg.phase2_iterations(subphase)
        running = np.zeros_like(theta)
        for _ in range(iterations):
            clock.check()
            deviation = moments.simulate(theta, _simulation_seed(cfg.seed, _PHASE2, counter)) - moments.observed
            counter += 1
            update = gain * (D_inv @ deviation)
            size = np.linalg.norm(update)
            if size > cfg.max_update_norm:
                update *= cfg.max_update_norm / size
            theta -= update
            running += theta
        theta[:] = running / iterations
        logger.debug("Sub-phase %d done (gain %.4f): theta %s", subphase, gain, theta.round(4).tolist())
    return theta


def mom_estimate(problem: SaomProblem, cfg: FitConfig) -> FitResult:
    clock = _WallClock(cfg.max_wall_seconds)
    moments = MomentFunction(problem)
    p = moments.n_params
    labels = [e.label for e in problem.effects]
    theta = np.zeros(p)

    try:
        D = _phase1(moments, cfg, clock)
        theta = _phase2(moments, D, cfg, clock, theta)

        sims = np.empty((cfg.phase3_reps, p))
        for r in range(cfg.phase3_reps):
            clock.check()
            sims[r] = moments.simulate(theta, _simulation_seed(cfg.seed, _PHASE3, r))

        derivative_reps = min(cfg.phase3_derivative_reps, cfg.phase3_reps)
        try:
            D = estimate_derivative(
                moments,
                theta,
                derivative_reps,
                cfg.derivative_step,
                cfg.seed,
                _PHASE3,
                clock,
                base=sims[:derivative_reps],
            )
        except SingularDerivativeError as e:
            logger.warning("Derivative at the estimate is singular, keeping the Phase-1 matrix: %s", e)
    except _WallCapExceeded:
        logger.warning(
            "Wall-time cap of %.0fs reached after %.1fs; returning an unconverged result",
            cfg.max_wall_seconds,
            clock.elapsed,
        )
        nan = [math.nan] * p
        return FitResult(
            effect_labels=labels,
            theta_hat=theta.tolist(),
            std_errors=nan,
            t_conv=nan,
            t_conv_max=math.nan,
            converged=False,
            wall_seconds=clock.elapsed,
            seed=cfg.seed,
            message="wall-time cap exceeded",
        )

    deviations = sims - moments.observed
    mean_dev = deviations.mean(axis=0)
    sd_dev = deviations.std(axis=0, ddof=1)
    t_conv = np.divide(mean_dev, sd_dev, out=np.zeros(p), where=sd_dev > 0)
    t_conv[(sd_dev == 0) & (mean_dev != 0)] = np.inf

    sigma = np.atleast_2d(np.cov(sims, rowvar=False))
    D_inv = linalg.inv(D)
    covariance = D_inv @ sigma @ D_inv.T
    std_errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    result = FitResult(
        effect_labels=labels,
        theta_hat=theta.tolist(),
        std_errors=std_errors.tolist(),
        t_conv=t_conv.tolist(),
        t_conv_max=float(np.max(np.abs(t_conv))),
        converged=True,
        wall_seconds=clock.elapsed,
        seed=cfg.seed,
    )
    logger.info(
        "Fit done in %.1fs: theta %s, t_conv_max %.3f, config %s",
        result.wall_seconds,
        np.round(theta, 4).tolist(),
        result.t_conv_max,
        cfg.model_dump_json(),
    )
    return result


# ──────────────────────────────────────────────
# Post-estimation
# ──────────────────────────────────────────────


def passes_convergence_thresholds(
    t_conv_max: float | None, t_conv_spatial: float | None, converged: bool
) -> bool:
    if not converged or t_conv_max is None or not t_conv_max <= MAX_T_CONV:
        return False
    if t_conv_spatial is None:
        return True
    return abs(t_conv_spatial) <= MAX_T_CONV_SPATIAL


def convergence_filter(result: FitResult, spatial_index: int | None) -> bool:
    """Accept iff converged, max |t_conv| <= 0.2 and |t_conv| of the spatial effect <= 0.1."""
    spatial = result.t_conv[spatial_index] if spatial_index is not None else None
    return passes_convergence_thresholds(result.t_conv_max, spatial, result.converged)


def wald_significance(result: FitResult, level: float = 0.05) -> list[bool]:
    critical = norm.ppf(1.0 - level / 2.0)
    flags = []
    for label, estimate, se in zip(result.effect_labels, result.theta_hat, result.std_errors):
        if not se > 0:
            logger.warning("Wald test for %s is undefined (se=%s); reported insignificant", label, se)
            flags.append(False)
            continue
        flags.append(abs(estimate / se) > critical)
    return flags
