"""
Gradient estimators assembled from noisy function measurements.

One-sided (GSPGS):  g = V/delta * sum_l w_l f(theta + l delta U, xi_l)
Balanced (B-GSPGS): g = V/delta * sum_j b_j (f(theta + o_j delta U) - f(theta - o_j delta U)) / 2,
                    o_j = 2j + 1
FDSA:               g_i = (f(theta + delta e_i) - f(theta - delta e_i)) / (2 delta)

One (U, V) draw is shared by all measurements of an estimate; noise is fresh
per measurement, including the l = 0 measurement at theta.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from src.models.errors import ConfigurationError
from src.models.estimator_config import EstimatorConfig, EstimatorSide
from src.models.rng_stream import RngStream
from src.services.coefficients import balanced_coefficients, onesided_coefficients
from src.services.objectives import NoisyObjective
from src.services.perturbations import sample_uv, sample_uv_batch

logger = logging.getLogger(__name__)

BATCH_CHUNK = 20_000


class GradientEstimate(NamedTuple):
    gradient: np.ndarray
    measurements: int


def _check_theta(objective: NoisyObjective, theta) -> np.ndarray:
    theta = objective.check_point(theta)
    if not np.all(np.isfinite(theta)):
        raise ConfigurationError("theta must be finite")
    return theta


def _require_side(config: EstimatorConfig, side: EstimatorSide):
    if config.side is not side:
        raise ConfigurationError(f"Expected a {side.value} estimator config, got {config.side.value}")


def directional_sums(objective: NoisyObjective, theta: np.ndarray, u: np.ndarray,
                     config: EstimatorConfig, rng: Optional[RngStream], delta: float) -> np.ndarray:
    """
    Weighted measurement sum for each row of u, before scaling by V/delta.

    u has shape (n, d); returns shape (n,).
    """
    n, d = u.shape
    if config.side is EstimatorSide.ONE_SIDED:
        coefficients = onesided_coefficients(config.order)
        offsets = delta * coefficients.offsets
        points = theta + offsets[None, :, None] * u[:, None, :]
        values = objective.evaluate_batch(points.reshape(-1, d), rng).reshape(n, -1)
        return values @ coefficients.weights

    coefficients = balanced_coefficients(config.order)
    offsets = delta * coefficients.offsets
    shifts = offsets[None, :, None] * u[:, None, :]
    points = np.concatenate([theta + shifts, theta - shifts], axis=1)
    values = objective.evaluate_batch(points.reshape(-1, d), rng).reshape(n, 2, -1)
    return ((values[:, 0, :] - values[:, 1, :]) / 2.0) @ coefficients.weights


def _fdsa(objective: NoisyObjective, theta: np.ndarray, rng: Optional[RngStream], delta: float) -> np.ndarray:
    shifts = delta * np.eye(objective.dim)
    points = np.concatenate([theta + shifts, theta - shifts], axis=0)
    values = objective.evaluate_batch(points, rng)
    return (values[:objective.dim] - values[objective.dim:]) / (2.0 * delta)


def estimate_at_delta(objective: NoisyObjective, theta: np.ndarray, config: EstimatorConfig,
                      rng: RngStream, delta: float) -> GradientEstimate:
    """Unified estimate with an explicit delta, skipping input validation."""
    if config.side is EstimatorSide.FDSA:
        return GradientEstimate(_fdsa(objective, theta, rng, delta), 2 * objective.dim)
    u, v = sample_uv(config.scheme, objective.dim, rng)
    total = directional_sums(objective, theta, u[None, :], config, rng, delta)[0]
    return GradientEstimate(v * (total / delta), config.measurements_per_iteration(objective.dim))


def gspgs_estimate(objective: NoisyObjective, theta, config: EstimatorConfig, rng: RngStream) -> GradientEstimate:
    """
    One-sided estimate of order k1 from k1+1 measurements.

    Raises:
        ConfigurationError: config is not one-sided or theta is malformed
        NumericalError: a measurement is not finite
    """
    _require_side(config, EstimatorSide.ONE_SIDED)
    theta = _check_theta(objective, theta)
    return estimate_at_delta(objective, theta, config, rng, config.delta)


def bgspgs_estimate(objective: NoisyObjective, theta, config: EstimatorConfig, rng: RngStream) -> GradientEstimate:
    """Balanced estimate of order k2 from 2 k2 measurements."""
    _require_side(config, EstimatorSide.BALANCED)
    theta = _check_theta(objective, theta)
    return estimate_at_delta(objective, theta, config, rng, config.delta)


def fdsa_estimate(objective: NoisyObjective, theta, delta: float, rng: RngStream) -> GradientEstimate:
    """Coordinate-wise central differences from 2d measurements."""
    config = EstimatorConfig.fdsa(delta)
    theta = _check_theta(objective, theta)
    return estimate_at_delta(objective, theta, config, rng, config.delta)


def estimate_gradient(objective: NoisyObjective, theta, config: EstimatorConfig, rng: RngStream) -> GradientEstimate:
    """Unified entry point over the three estimator families."""
    theta = _check_theta(objective, theta)
    return estimate_at_delta(objective, theta, config, rng, config.delta)


def estimate_with_direction(objective: NoisyObjective, theta, config: EstimatorConfig,
                            u, v, rng: Optional[RngStream] = None) -> GradientEstimate:
    """
    Estimate for a fixed (U, V); noiseless when rng is None.
    """
    theta = _check_theta(objective, theta)
    if config.side is EstimatorSide.FDSA:
        return GradientEstimate(_fdsa(objective, theta, rng, config.delta), 2 * objective.dim)
    u = np.asarray(u, dtype=float).reshape(1, objective.dim)
    v = np.asarray(v, dtype=float).reshape(objective.dim)
    total = directional_sums(objective, theta, u, config, rng, config.delta)[0]
    return GradientEstimate(v * (total / config.delta), config.measurements_per_iteration(objective.dim))


def sample_estimates(objective: NoisyObjective, theta, config: EstimatorConfig, rng: Optional[RngStream],
                     n: int, u=None, v=None, chunk: int = BATCH_CHUNK) -> np.ndarray:
    """
    n independent estimates as rows of an (n, d) array.

    When u and v are given the direction is held fixed and only the noise is
    redrawn. rng=None gives noiseless measurements (directions then need a
    stream unless fixed).
    """
    theta = _check_theta(objective, theta)
    d = objective.dim
    if n < 1:
        raise ConfigurationError(f"Sample count must be at least 1, got {n}")

    fixed = u is not None
    if fixed:
        u_fixed = np.asarray(u, dtype=float).reshape(1, d)
        v_fixed = np.asarray(v, dtype=float).reshape(1, d)
    elif rng is None and config.side is not EstimatorSide.FDSA:
        raise ConfigurationError("Drawing directions requires a random stream")

    estimates = np.empty((n, d))
    for start in range(0, n, chunk):
        size = min(chunk, n - start)
        if config.side is EstimatorSide.FDSA:
            for row in range(size):
                estimates[start + row] = _fdsa(objective, theta, rng, config.delta)
            continue
        if fixed:
            u_block = np.repeat(u_fixed, size, axis=0)
            v_block = np.repeat(v_fixed, size, axis=0)
        else:
            u_block, v_block = sample_uv_batch(config.scheme, d, rng, size)
        totals = directional_sums(objective, theta, u_block, config, rng, config.delta)
        estimates[start:start + size] = v_block * (totals / config.delta)[:, None]

    logger.debug("Sampled %d estimates with %s", n, config.describe())
    return estimates
