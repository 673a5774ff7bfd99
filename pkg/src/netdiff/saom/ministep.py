"""Forward simulation of behaviour ministeps on a frozen network.

A period gives K ~ Poisson(n * rate * duration) opportunities. Each one picks
an actor uniformly and lets it keep or toggle its value with multinomial-logit
probabilities over the two resulting objective values. Draws are taken in a
fixed order (K, then all actors, then all uniforms) so two runs with the same
seed and different theta share their random numbers.
"""

import copy
import logging

import numpy as np
from scipy.special import expit

from netdiff import InvalidArgumentError
from netdiff.models.schemas import (
    BehaviourState,
    EffectKind,
    EffectSpec,
    MinistepRecord,
    Network,
)
from netdiff.saom.effects import (
    behaviour_objective,
    check_theta,
    covariate_matrix,
    weights_of,
)

logger = logging.getLogger(__name__)

SeedLike = int | np.random.SeedSequence | np.random.Generator | None


def ministep_probabilities(
    i: int,
    state: BehaviourState,
    effects: list[EffectSpec],
    theta: object,
    W: Network | np.ndarray,
    X: object = None,
    mean_sim: float | None = None,
    mean_behaviour: float = 0.0,
) -> np.ndarray:
    """Probabilities of (stay, toggle) for actor i."""
    y = np.array(state.y)
    if not 0 <= i < y.shape[0]:
        raise InvalidArgumentError(f"actor {i} outside 0..{y.shape[0] - 1}")
    toggled = y.copy()
    toggled[i] = 1 - toggled[i]
    f_stay = behaviour_objective(i, W, y, effects, theta, X, mean_sim, mean_behaviour=mean_behaviour)
    f_toggle = behaviour_objective(
        i, W, toggled, effects, theta, X, mean_sim, y_current=y, mean_behaviour=mean_behaviour
    )
    p_toggle = float(expit(f_toggle - f_stay))
    return np.array([1.0 - p_toggle, p_toggle])


class BehaviourSimulator:
    """Ministep kernel for one (W, effects, theta, X) combination.

    Keeps the weighted neighbour sums z = W y up to date after each toggle,
    so a ministep costs O(degree) instead of O(n).
    """

    def __init__(
        self,
        W: Network | np.ndarray,
        effects: list[EffectSpec],
        theta: object,
        X: object = None,
        mean_sim: float | None = None,
        mean_behaviour: float = 0.0,
    ) -> None:
        self.weights = weights_of(W)
        self.n = self.weights.shape[0]
        self.effects = effects
        self.theta = check_theta(theta, effects)
        self.X = covariate_matrix(X, self.n)
        if any(e.kind == EffectKind.AV_SIM for e in effects) and mean_sim is None:
            raise InvalidArgumentError("avSim needs the observed mean similarity")
        self.mean_sim = mean_sim
        self.mean_behaviour = float(mean_behaviour)

        for e in effects:
            if e.kind == EffectKind.EFF_FROM and e.covariate >= self.X.shape[1]:
                raise InvalidArgumentError(
                    f"{e.label} refers to covariate {e.covariate}, only {self.X.shape[1]} given"
                )

        self.row_sums = self.weights.sum(axis=1)
        # in_neighbours[i]: actors j with w_ji > 0, whose z_j moves when y_i does
        self.in_neighbours = [np.flatnonzero(self.weights[:, i]) for i in range(self.n)]
        self.in_weights = [self.weights[nbrs, i] for i, nbrs in enumerate(self.in_neighbours)]

    def with_theta(self, theta: object) -> "BehaviourSimulator":
        clone = copy.copy(self)
        clone.theta = check_theta(theta, self.effects)
        return clone

    def objective(self, i: int, value: int, z_i: float) -> float:
        """Actor i's objective with its own value set to ``value``."""
        total = 0.0
        r = self.row_sums[i]
        for t, e in zip(self.theta, self.effects):
            if e.kind == EffectKind.AV_ALT:
                c = self.mean_behaviour
                s = (value - c) * (z_i / r - c) if r > 0 else 0.0
            elif e.kind == EffectKind.AV_SIM:
                s = ((z_i if value else r - z_i) / r - self.mean_sim) if r > 0 else 0.0
            elif e.kind == EffectKind.EFF_FROM:
                s = value * self.X[i, e.covariate]
            else:
                s = float(value)
            total += t * s
        return total

    def run_steps(
        self,
        y0: object,
        actors: np.ndarray,
        uniforms: np.ndarray,
        times: np.ndarray | None = None,
    ) -> tuple[np.ndarray, list[MinistepRecord] | None]:
        """Apply one ministep per (actor, uniform) pair, committing each immediately."""
        y = np.array(y0, dtype=np.int8)
        z = self.weights @ y
        trace: list[MinistepRecord] | None = [] if times is not None else None

        for step, (i, u) in enumerate(zip(actors.tolist(), uniforms.tolist())):
            current = int(y[i])
            f_stay = self.objective(i, current, z[i])
            f_toggle = self.objective(i, 1 - current, z[i])
            p_toggle = float(expit(f_toggle - f_stay))
            toggle = u < p_toggle
            if toggle:
                delta = 1 - 2 * current
                y[i] = 1 - current
                nbrs = self.in_neighbours[i]
                if nbrs.size:
                    z[nbrs] += delta * self.in_weights[i]
            if trace is not None:
                trace.append(
                    MinistepRecord(
                        index=step,
                        time=float(times[step]),
                        actor=i,
                        option="toggle" if toggle else "stay",
                        objective_stay=f_stay,
                        objective_toggle=f_toggle,
                        probability=p_toggle if toggle else 1.0 - p_toggle,
                    )
                )
        return y, trace

    def simulate(
        self,
        y0: object,
        rate: float,
        seed: SeedLike,
        duration: float = 1.0,
        start_clock: float = 0.0,
        trace: bool = False,
    ) -> BehaviourState:
        if not rate > 0:
            raise InvalidArgumentError(f"rate must be positive, got {rate}")
        if not duration > 0:
            raise InvalidArgumentError(f"duration must be positive, got {duration}")
        y0 = np.asarray(y0)
        if y0.shape != (self.n,):
            raise InvalidArgumentError(f"y0 must have length {self.n}, got shape {y0.shape}")

        rng = np.random.default_rng(seed)
        n_opportunities = int(rng.poisson(self.n * rate * duration))
        actors = rng.integers(0, self.n, size=n_opportunities)
        uniforms = rng.random(n_opportunities)

        times = None
        if trace:
            # Drawn last so tracing never shifts the ministep stream
            spacings = rng.exponential(size=n_opportunities + 1)
            times = start_clock + duration * np.cumsum(spacings)[:-1] / spacings.sum()

        y_end, records = self.run_steps(y0, actors, uniforms, times)
        return BehaviourState(
            y=y_end,
            clock=start_clock + duration,
            opportunities=n_opportunities,
            trace=records,
        )


def simulate_period(
    W: Network | np.ndarray,
    y0: object,
    effects: list[EffectSpec],
    theta: object,
    rate: float,
    X: object = None,
    mean_sim: float | None = None,
    seed: SeedLike = None,
    trace: bool = False,
    duration: float = 1.0,
    mean_behaviour: float = 0.0,
) -> BehaviourState:
    """Simulate one period of behaviour change with ties held fixed."""
    simulator = BehaviourSimulator(W, effects, theta, X, mean_sim, mean_behaviour)
    state = simulator.simulate(y0, rate, seed, duration=duration, trace=trace)
    logger.debug(
        "Simulated period: %d opportunities, %d changes",
        state.opportunities,
        int(np.sum(state.y != np.asarray(y0))),
    )
    return state
