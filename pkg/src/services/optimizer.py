"""
Stochastic gradient recursion theta(n+1) = theta(n) - a(n) g(n).
"""

import logging
import math

import numpy as np

from src.config import DIVERGENCE_GUARD
from src.models.errors import ConfigurationError, DivergenceError, UndefinedMetricError
from src.models.estimator_config import EstimatorConfig
from src.models.rng_stream import RngStream
from src.models.run_result import IterationRecord, RunResult
from src.models.schedule import Schedule
from src.services.gradient_estimators import estimate_at_delta
from src.services.objectives import NoisyObjective

logger = logging.getLogger(__name__)

# spawn index of the stream that picks the randomized output iterate
OUTPUT_STREAM_INDEX = 1


def parameter_error(theta_final, theta0, theta_star) -> float:
    """
    |theta_final - theta*|^2 / |theta0 - theta*|^2.

    Raises:
        UndefinedMetricError: theta0 equals theta*
    """
    theta_final = np.asarray(theta_final, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    denominator = float(np.sum((theta0 - theta_star) ** 2))
    if denominator == 0.0:
        raise UndefinedMetricError("Parameter error is undefined when theta0 equals the optimum")
    return float(np.sum((theta_final - theta_star) ** 2)) / denominator


def theorem2_params(m: int, L: float, k1: int) -> Schedule:
    """
    Constant schedule for an m-iteration run:
    a = min(1/L, m^-(k1+2)/(2k1+2)), delta = m^-1/(2k1+2).
    """
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 1:
        raise ConfigurationError(f"m must be a positive integer, got {m!r}")
    if not (math.isfinite(L) and L > 0):
        raise ConfigurationError(f"Smoothness constant L must be positive, got {L}")
    if isinstance(k1, bool) or not isinstance(k1, (int, np.integer)) or k1 < 1:
        raise ConfigurationError(f"k1 must be a positive integer, got {k1!r}")
    a = min(1.0 / L, float(m) ** (-(k1 + 2) / (2 * k1 + 2)))
    delta = float(m) ** (-1.0 / (2 * k1 + 2))
    return Schedule.constant(a, delta)


def run_sgd(objective: NoisyObjective, estimator: EstimatorConfig, schedule: Schedule,
            theta0, budget: int, seed: int, *,
            divergence_guard: float = DIVERGENCE_GUARD,
            record_trace: bool = False,
            random_output: bool = False) -> RunResult:
    """
    Run the recursion until the next iteration would exceed the budget.

    Args:
        objective: noisy objective
        estimator: estimator family, order and scheme; its delta is replaced by delta(n)
        schedule: step sizes a(n) and sensitivities delta(n), n starting at 1
        theta0: initial point
        budget: total number of function measurements
        seed: seed of the run's random stream
        divergence_guard: abort when max |theta_i| exceeds this
        record_trace: keep per-iteration records
        random_output: also report theta(R), R uniform on 1..iterations

    Raises:
        ConfigurationError: budget below the per-iteration cost or malformed theta0
        DivergenceError: iterate became non-finite or exceeded the guard
    """
    theta = objective.check_point(theta0).copy()
    if not np.all(np.isfinite(theta)):
        raise ConfigurationError("theta0 must be finite")
    per_iteration = estimator.measurements_per_iteration(objective.dim)
    if budget < per_iteration:
        raise ConfigurationError(f"Budget {budget} is below the per-iteration cost {per_iteration}")

    iterations = budget // per_iteration
    rng = RngStream(seed)
    trace = [] if record_trace else None

    random_index = None
    random_iterate = None
    squared_gradient_sum = 0.0
    initial_squared_gradient = None
    track_gradient = random_output and objective.has_gradient()
    if random_output:
        # child stream, so the estimator draws match a run without random_output
        random_index = int(rng.spawn(OUTPUT_STREAM_INDEX).integers(1, iterations + 1))
    if track_gradient:
        initial_squared_gradient = float(np.sum(objective.true_gradient(theta) ** 2))

    logger.debug("run_sgd: %s, %s, schedule %s, %d iterations", objective.describe(),
                 estimator.describe(), schedule.describe(), iterations)

    for n in range(1, iterations + 1):
        if random_output and n == random_index:
            random_iterate = theta.copy()
        if track_gradient:
            squared_gradient_sum += float(np.sum(objective.true_gradient(theta) ** 2))

        step = schedule.step_size(n)
        delta = schedule.sensitivity(n)
        gradient, _ = estimate_at_delta(objective, theta, estimator, rng, delta)
        updated = theta - step * gradient

        if not np.all(np.isfinite(updated)) or np.max(np.abs(updated)) > divergence_guard:
            raise DivergenceError(
                f"Iterate diverged at n={n} (guard {divergence_guard:g})",
                iteration=n, last_theta=theta,
            )
        theta = updated
        if trace is not None:
            trace.append(IterationRecord(n, theta.copy(), step, delta, float(np.linalg.norm(gradient))))

    error = None
    theta_star = objective.optimum()
    if theta_star is not None:
        try:
            error = parameter_error(theta, theta0, theta_star)
        except UndefinedMetricError as e:
            logger.warning("Skipping parameter error: %s", e)

    return RunResult(
        final_theta=theta,
        iterations=iterations,
        measurements_used=iterations * per_iteration,
        budget=budget,
        seed=seed,
        parameter_error=error,
        trace=trace,
        random_index=random_index,
        random_iterate=random_iterate,
        mean_squared_gradient=squared_gradient_sum / iterations if track_gradient else None,
        initial_squared_gradient=initial_squared_gradient,
        metadata={
            'objective': objective.describe(),
            'estimator': estimator.describe(),
            'schedule': schedule.describe(),
        },
    )
