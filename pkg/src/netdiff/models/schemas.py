from __future__ import annotations

import math
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# ──────────────────────────────────────────────
# Array helpers
# ──────────────────────────────────────────────
# Domain values carry numpy arrays. They are copied on construction and
# marked read-only so a value can be shared across workers without copies.

_ARRAY_MODEL = ConfigDict(arbitrary_types_allowed=True, frozen=True)

ROW_SUM_TOLERANCE = 1e-12


def _readonly(values: object, dtype: type) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def _is_binary(arr: np.ndarray) -> bool:
    return bool(np.all((arr == 0) | (arr == 1)))


# ──────────────────────────────────────────────
# Networks
# ──────────────────────────────────────────────


class Network(BaseModel):
    """Exogenous connectivity W: symmetric binary ties plus row-normalized weights."""

    model_config = _ARRAY_MODEL

    n: int = Field(ge=1)
    adjacency: np.ndarray
    weights: np.ndarray
    coords: np.ndarray | None = None
    radius: float | None = Field(default=None, ge=0.0)

    @field_validator("adjacency", mode="before")
    @classmethod
    def _adjacency_array(cls, v: object) -> np.ndarray:
        return _readonly(v, np.int8)

    @field_validator("weights", mode="before")
    @classmethod
    def _weights_array(cls, v: object) -> np.ndarray:
        return _readonly(v, np.float64)

    @field_validator("coords", mode="before")
    @classmethod
    def _coords_array(cls, v: object) -> np.ndarray | None:
        return None if v is None else _readonly(v, np.float64)

    @model_validator(mode="after")
    def _check_invariants(self) -> Network:
        n = self.n
        if self.adjacency.shape != (n, n) or self.weights.shape != (n, n):
            raise ValueError(f"adjacency and weights must be {n}x{n}")
        if not _is_binary(self.adjacency):
            raise ValueError("adjacency must be binary")
        if np.any(np.diag(self.adjacency) != 0):
            raise ValueError("adjacency diagonal must be zero")
        if not np.array_equal(self.adjacency, self.adjacency.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if not np.array_equal(self.weights > 0, self.adjacency == 1):
            raise ValueError("weights must be positive exactly where ties exist")
        row_sums = self.weights.sum(axis=1)
        has_ties = self.adjacency.sum(axis=1) > 0
        if np.any(np.abs(row_sums[has_ties] - 1.0) > ROW_SUM_TOLERANCE):
            raise ValueError("weights rows with neighbours must sum to 1")
        if self.coords is not None:
            if self.coords.shape != (n, 2):
                raise ValueError(f"coords must be {n}x2")
            if np.any(self.coords < 0) or np.any(self.coords > 1):
                raise ValueError("coords must lie in the unit square")
        return self

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def mean_degree(self) -> float:
        return float(self.degrees.mean())

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2


# ──────────────────────────────────────────────
# BSAR model
# ──────────────────────────────────────────────


class BsarParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rho: float = Field(allow_inf_nan=False)
    beta: list[float] = Field(min_length=1)
    # Fixed at 1 for probit identification; exposed for simulation studies
    error_sd: float = Field(default=1.0, gt=0.0)


class LatentDraw(BaseModel):
    """One draw of the latent utilities and their observed binary outcomes."""

    model_config = _ARRAY_MODEL

    y_star: np.ndarray
    y: np.ndarray
    epsilon: np.ndarray

    @field_validator("y_star", "epsilon", mode="before")
    @classmethod
    def _float_array(cls, v: object) -> np.ndarray:
        return _readonly(v, np.float64)

    @field_validator("y", mode="before")
    @classmethod
    def _binary_array(cls, v: object) -> np.ndarray:
        return _readonly(v, np.int8)

    @model_validator(mode="after")
    def _check_observation(self) -> LatentDraw:
        if not (self.y_star.shape == self.y.shape == self.epsilon.shape):
            raise ValueError("y_star, y and epsilon must have equal length")
        if not np.array_equal(self.y == 1, self.y_star > 0):
            raise ValueError("y must equal 1 exactly where y_star > 0")
        return self


class GibbsConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_iter: int = Field(default=4000, gt=0)
    burn_in: int = Field(default=400, ge=0)
    rho_grid_size: int = Field(default=200, ge=2)
    prior_beta_variance: float = Field(default=1e6, gt=0.0)
    rho_boundary_margin: float = Field(default=1e-3, gt=0.0, lt=0.5)
    significance_level: float = Field(default=0.05, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _burn_in_below_iterations(self) -> GibbsConfig:
        if self.burn_in >= self.n_iter:
            raise ValueError("burn_in must be smaller than n_iter")
        return self


class PosteriorSummary(BaseModel):
    parameter_names: list[str]
    mean: list[float]
    sd: list[float]
    z: list[float]
    significant: list[bool]
    n_draws: int
    rho_boundary_share: float = Field(ge=0.0, le=1.0)
    boundary_warning: bool = False

    @field_validator("sd")
    @classmethod
    def _nonnegative_sd(cls, v: list[float]) -> list[float]:
        if any(s < 0 for s in v):
            raise ValueError("posterior standard deviations must be >= 0")
        return v

    def index(self, name: str) -> int:
        return self.parameter_names.index(name)

    def rows(self) -> list[dict[str, object]]:
        return [
            {
                "name": name,
                "mean": m,
                "sd": s,
                "z": z,
                "significant": int(sig),
            }
            for name, m, s, z, sig in zip(
                self.parameter_names, self.mean, self.sd, self.z, self.significant
            )
        ]


class ProbitResult(BaseModel):
    parameter_names: list[str]
    coefficients: list[float]
    std_errors: list[float]
    z: list[float]
    significant: list[bool]
    log_likelihood: float
    iterations: int
    gradient_max_norm: float

    def rows(self) -> list[dict[str, object]]:
        return [
            {"name": name, "coef": b, "se": se, "z": z, "significant": int(sig)}
            for name, b, se, z, sig in zip(
                self.parameter_names,
                self.coefficients,
                self.std_errors,
                self.z,
                self.significant,
            )
        ]


# ──────────────────────────────────────────────
# SAOM behaviour dynamics
# ──────────────────────────────────────────────


class EffectKind(str, Enum):
    AV_SIM = "avSim"
    AV_ALT = "avAlt"
    EFF_FROM = "effFrom"
    LINEAR_SHAPE = "linearShape"


SPATIAL_KINDS = frozenset({EffectKind.AV_SIM, EffectKind.AV_ALT})


class EffectSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: EffectKind
    covariate: int | None = Field(default=None, ge=0)
    label: str = ""

    @model_validator(mode="after")
    def _check_covariate(self) -> EffectSpec:
        if self.kind == EffectKind.EFF_FROM and self.covariate is None:
            raise ValueError("effFrom requires a covariate index")
        if self.kind != EffectKind.EFF_FROM and self.covariate is not None:
            raise ValueError(f"{self.kind.value} takes no covariate index")
        if not self.label:
            label = self.kind.value
            if self.covariate is not None:
                label = f"{label}_x{self.covariate}"
            object.__setattr__(self, "label", label)
        return self

    @property
    def is_spatial(self) -> bool:
        return self.kind in SPATIAL_KINDS


def check_effect_set(effects: list[EffectSpec]) -> None:
    """Raise ValueError unless the effect list is a valid behaviour model."""
    if not effects:
        raise ValueError("at least one effect is required")
    if sum(e.is_spatial for e in effects) > 1:
        raise ValueError("avSim and avAlt cannot be estimated in the same model")
    labels = [e.label for e in effects]
    if len(set(labels)) != len(labels):
        raise ValueError(f"effect labels must be unique, got {labels}")


class MinistepRecord(BaseModel):
    index: int
    time: float
    actor: int
    option: Literal["stay", "toggle"]
    objective_stay: float
    objective_toggle: float
    probability: float = Field(ge=0.0, le=1.0)


class BehaviourState(BaseModel):
    model_config = _ARRAY_MODEL

    y: np.ndarray
    clock: float = Field(default=0.0, ge=0.0)
    opportunities: int = Field(default=0, ge=0)
    trace: list[MinistepRecord] | None = None

    @field_validator("y", mode="before")
    @classmethod
    def _binary(cls, v: object) -> np.ndarray:
        arr = _readonly(v, np.int8)
        if not _is_binary(arr):
            raise ValueError("behaviour values must be 0 or 1")
        return arr


class SaomProblem(BaseModel):
    """A two-or-more-wave behaviour estimation problem on frozen (structural) ties."""

    model_config = _ARRAY_MODEL

    network: Network
    waves: list[np.ndarray]
    covariates: list[np.ndarray]
    effects: list[EffectSpec]
    behaviour_rate: float = Field(default=1.0, gt=0.0)
    anchor_pair: tuple[int, int] | None = None
    mean_sim: float
    # centre of the alter values in avAlt, the observed mean behaviour
    mean_behaviour: float = Field(default=0.0, ge=0.0, le=1.0)

    @field_validator("waves", mode="before")
    @classmethod
    def _wave_arrays(cls, v: list[object]) -> list[np.ndarray]:
        return [_readonly(w, np.int8) for w in v]

    @field_validator("covariates", mode="before")
    @classmethod
    def _covariate_arrays(cls, v: list[object]) -> list[np.ndarray]:
        out = []
        for c in v:
            arr = np.array(c, dtype=np.float64)
            if arr.ndim == 1:
                arr = arr[:, None]
            out.append(_readonly(arr, np.float64))
        return out

    @model_validator(mode="after")
    def _check_problem(self) -> SaomProblem:
        n = self.network.n
        if len(self.waves) < 2:
            raise ValueError("at least two waves are required")
        if len(self.covariates) != len(self.waves):
            raise ValueError("one covariate matrix per wave is required")
        for t, wave in enumerate(self.waves):
            if wave.shape != (n,):
                raise ValueError(f"wave {t} has length {wave.shape[0]}, expected {n}")
            if not _is_binary(wave):
                raise ValueError(f"wave {t} is not binary")
        k = self.covariates[0].shape[1]
        for t, cov in enumerate(self.covariates):
            if cov.shape != (n, k):
                raise ValueError(f"covariates of wave {t} must be {n}x{k}")
        check_effect_set(self.effects)
        for effect in self.effects:
            if effect.kind == EffectKind.EFF_FROM and effect.covariate >= k:
                raise ValueError(
                    f"effect {effect.label} refers to covariate {effect.covariate}, "
                    f"only {k} available"
                )
        if self.anchor_pair is not None:
            a, b = self.anchor_pair
            first, second = self.waves[0], self.waves[1]
            if (first[a], second[a], first[b], second[b]) != (0, 1, 1, 0):
                raise ValueError("anchor pair must be mirrored across the two waves")
            if any(e.kind == EffectKind.LINEAR_SHAPE for e in self.effects):
                raise ValueError("linearShape is not allowed with anchored fake waves")
        return self

    @property
    def n_periods(self) -> int:
        return len(self.waves) - 1

    @property
    def spatial_index(self) -> int | None:
        for k, effect in enumerate(self.effects):
            if effect.is_spatial:
                return k
        return None


class FitConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    # None means 7 + 3p for p parameters
    phase1_reps: int | None = Field(default=None, gt=0)
    phase2_subphases: int = Field(default=4, gt=0)
    phase2_initial_gain: float = Field(default=0.2, gt=0.0, le=1.0)
    # Sub-phase s (0-based) runs round(base * growth**s) updates
    phase2_base_iterations: int = Field(default=50, gt=0)
    phase2_growth: float = Field(default=2.52, ge=1.0)
    phase3_reps: int = Field(default=1000, gt=1)
    phase3_derivative_reps: int = Field(default=200, gt=1)
    derivative_step: float = Field(default=0.1, gt=0.0)
    max_update_norm: float = Field(default=5.0, gt=0.0)
    max_wall_seconds: float = Field(default=3600.0, gt=0.0)
    seed: int = Field(default=0, ge=0)

    def phase1_reps_for(self, n_params: int) -> int:
        return self.phase1_reps if self.phase1_reps is not None else 7 + 3 * n_params

    def phase2_iterations(self, subphase: int) -> int:
        return round(self.phase2_base_iterations * self.phase2_growth**subphase)

    def phase2_gain(self, subphase: int) -> float:
        return self.phase2_initial_gain / 2**subphase


class FitResult(BaseModel):
    effect_labels: list[str]
    theta_hat: list[float]
    std_errors: list[float]
    t_conv: list[float]
    t_conv_max: float
    converged: bool
    wall_seconds: float = Field(ge=0.0)
    seed: int
    message: str | None = None

    @model_validator(mode="after")
    def _check_result(self) -> FitResult:
        p = len(self.effect_labels)
        if not (len(self.theta_hat) == len(self.std_errors) == len(self.t_conv) == p):
            raise ValueError("one estimate, standard error and t-ratio per effect")
        if any(se < 0 for se in self.std_errors):
            raise ValueError("standard errors must be >= 0")
        finite = [abs(t) for t in self.t_conv if not math.isnan(t)]
        if len(finite) == p and p > 0 and not math.isclose(
            self.t_conv_max, max(finite), rel_tol=1e-12, abs_tol=1e-12
        ):
            raise ValueError("t_conv_max must equal the largest |t_conv|")
        return self


# ──────────────────────────────────────────────
# Monte Carlo experiment
# ──────────────────────────────────────────────


class Estimator(str, Enum):
    GIBBS = "gibbs"
    SAOM_AVSIM = "saom_avsim"
    SAOM_AVALT = "saom_avalt"


class ExperimentGrid(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rho_values: list[float] = Field(
        default=[-0.8, -0.6, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8],
        min_length=1,
    )
    n_values: list[int] = Field(default=[50, 250, 500], min_length=1)
    reps: int = Field(default=500, ge=1)
    dgp_beta: tuple[float, float] = (4.0, -2.0)
    x_mean: float = 2.0
    # Standard deviation; N(2, 4) is read as variance 4
    x_sd: float = Field(default=2.0, gt=0.0)
    avg_degree: float = Field(default=5.0, gt=0.0)
    estimators: list[Estimator] = Field(
        default=[Estimator.GIBBS, Estimator.SAOM_AVSIM], min_length=1
    )
    master_seed: int = Field(default=2019, ge=0)

    @field_validator("rho_values")
    @classmethod
    def _rho_inside_unit_interval(cls, v: list[float]) -> list[float]:
        if any(not -1.0 < r < 1.0 for r in v):
            raise ValueError("every rho must lie in (-1, 1)")
        return v

    @field_validator("n_values")
    @classmethod
    def _enough_nodes(cls, v: list[int]) -> list[int]:
        if any(n < 3 for n in v):
            raise ValueError("every n must be at least 3")
        return v

    @property
    def cells(self) -> list[tuple[float, int]]:
        return [(rho, n) for n in self.n_values for rho in self.rho_values]


def cell_id(rho: float, n: int) -> str:
    return f"rho{rho:+.2f}_n{n}"


class ReplicationRow(BaseModel):
    cell_id: str
    rho: float
    n: int
    rep: int
    estimator: Estimator
    spatial_est: float = math.nan
    spatial_se: float = math.nan
    spatial_sig: bool = False
    slope_est: float = math.nan
    slope_se: float = math.nan
    slope_sig: bool = False
    converged: bool = False
    accepted: bool = False
    seconds: float | None = None
    seed: int
    t_conv_max: float | None = None
    t_conv_spatial: float | None = None
    failed: bool = False
    error: str | None = None


class CellSummary(BaseModel):
    rho: float
    n: int
    estimator: Estimator
    reps: int = Field(ge=0)
    n_accepted: int = Field(ge=0)
    convergence_rate: float | None = Field(default=None, ge=0.0, le=1.0)
    spatial_mean: float | None = None
    spatial_sd: float | None = None
    slope_mean: float | None = None
    slope_sd: float | None = None
    spatial_sig_rate: float | None = Field(default=None, ge=0.0, le=1.0)
    slope_sig_rate: float | None = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _accepted_within_reps(self) -> CellSummary:
        if self.n_accepted > self.reps:
            raise ValueError("accepted count cannot exceed replications")
        return self


# ──────────────────────────────────────────────
# Panel data
# ──────────────────────────────────────────────


class PanelDataset(BaseModel):
    model_config = _ARRAY_MODEL

    unit_ids: list[str]
    wave_labels: list[str]
    # waves x units
    outcomes: np.ndarray
    # waves x units x covariates
    covariates: np.ndarray
    covariate_names: list[str]
    network: Network

    @field_validator("outcomes", mode="before")
    @classmethod
    def _outcome_array(cls, v: object) -> np.ndarray:
        return _readonly(v, np.int8)

    @field_validator("covariates", mode="before")
    @classmethod
    def _covariate_array(cls, v: object) -> np.ndarray:
        return _readonly(v, np.float64)

    @model_validator(mode="after")
    def _check_panel(self) -> PanelDataset:
        t, n = len(self.wave_labels), len(self.unit_ids)
        if self.outcomes.shape != (t, n):
            raise ValueError(f"outcomes must be {t}x{n}")
        if not _is_binary(self.outcomes):
            raise ValueError("outcomes must be binary")
        if self.covariates.shape != (t, n, len(self.covariate_names)):
            raise ValueError("covariates must be waves x units x covariates")
        if np.isnan(self.covariates).any():
            raise ValueError("covariates must be complete after imputation")
        if self.network.n != n:
            raise ValueError("proximity network must cover every unit")
        return self

    @property
    def n_waves(self) -> int:
        return len(self.wave_labels)

    def wave_index(self, label: str | None) -> int:
        if label is None:
            return self.n_waves - 1
        return self.wave_labels.index(label)
