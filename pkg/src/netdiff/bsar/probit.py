import logging
import warnings

import numpy as np
import statsmodels.api as sm
from scipy.stats import norm
from statsmodels.tools.sm_exceptions import (
    ConvergenceWarning,
    PerfectSeparationError,
    PerfectSeparationWarning,
)

from netdiff import InvalidArgumentError
from netdiff.bsar import DivergingCoefficientsError
from netdiff.bsar.gibbs import binary_outcome
from netdiff.bsar.simulate import design_matrix
from netdiff.models.schemas import ProbitResult

logger = logging.getLogger(__name__)

MAX_NEWTON_ITERATIONS = 100
GRADIENT_TOLERANCE = 1e-8


def probit_fit(
    X: object,
    y: object,
    names: list[str] | None = None,
    significance_level: float = 0.05,
) -> ProbitResult:
    """Maximum-likelihood probit by Newton iterations."""
    X = design_matrix(X, len(np.asarray(X)))
    y = binary_outcome(y, X.shape[0])
    k = X.shape[1]
    if names is None:
        names = [f"beta_{j}" for j in range(k)]
    if len(names) != k:
        raise InvalidArgumentError(f"expected {k} coefficient names, got {len(names)}")
    if np.linalg.matrix_rank(X) < k:
        raise InvalidArgumentError("X must have full column rank")

    model = sm.Probit(y.astype(np.float64), X)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", PerfectSeparationWarning)
            warnings.simplefilter("ignore", ConvergenceWarning)
            fitted = model.fit(
                method="newton", maxiter=MAX_NEWTON_ITERATIONS, tol=1e-12, disp=False
            )
    except (PerfectSeparationError, PerfectSeparationWarning) as e:
        raise DivergingCoefficientsError(f"perfect separation: coefficients diverge ({e})") from e

    params = np.asarray(fitted.params, dtype=np.float64)
    iterations = int(fitted.mle_retvals.get("iterations", MAX_NEWTON_ITERATIONS))
    gradient = float(np.max(np.abs(model.score(params)))) if np.all(np.isfinite(params)) else np.inf
    if not gradient < GRADIENT_TOLERANCE:
        raise DivergingCoefficientsError(
            f"Newton iterations did not converge after {iterations} steps "
            f"(gradient max-norm {gradient:.3g})"
        )

    std_errors = np.asarray(fitted.bse, dtype=np.float64)
    z = np.divide(params, std_errors, out=np.zeros_like(params), where=std_errors > 0)
    critical = norm.ppf(1.0 - significance_level / 2.0)

    logger.debug("Probit converged in %d iterations, log-likelihood %.4f", iterations, fitted.llf)
    return ProbitResult(
        parameter_names=names,
        coefficients=params.tolist(),
        std_errors=std_errors.tolist(),
        z=z.tolist(),
        significant=(np.abs(z) > critical).tolist(),
        log_likelihood=float(fitted.llf),
        iterations=iterations,
        gradient_max_norm=gradient,
    )
