"""
Diagnostics for the estimator bias and variance orders and the coefficient identities.

Bias oracles:
- exact enumeration over the 2^d patterns of a two-point scheme (d <= 12)
- Monte Carlo with the analytic gradient as control variate, since
  E[V U^T grad F] = grad F leaves E[g - V U^T grad F] equal to the bias
"""

import logging
import math
from fractions import Fraction
from statistics import NormalDist
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.models.errors import ConfigurationError
from src.models.estimator_config import EstimatorConfig, EstimatorSide
from src.models.perturbation import PerturbationKind, PerturbationScheme
from src.models.rng_stream import RngStream
from src.models.sweep_report import IdentityReport, MomentReport, SweepReport, SweepVerdict
from src.services.coefficients import (
    balanced_coefficients,
    balanced_sum_rule,
    harmonic_number,
    kappa,
    onesided_coefficients,
    onesided_sum_rule,
)
from src.services.gradient_estimators import directional_sums, sample_estimates
from src.services.objectives import NoisyObjective, RidgePowerObjective
from src.services.perturbations import enumerate_two_point, sample_uv_batch

logger = logging.getLogger(__name__)

EXACT_THRESHOLD = 1e-13
FLOAT_RULE_TOLERANCE = 1e-12
MAX_IDENTITY_ORDER = 12
SINGLE_ENTRY_ALARM = 0.0027  # two-sided tail beyond 3 standard errors
MC_CHUNK = 100_000


def _require_noiseless(objective: NoisyObjective):
    if objective.noise_sigma != 0:
        raise ConfigurationError("Bias oracles need a noiseless objective (sigma = 0)")


def exact_bias_bernoulli(objective: NoisyObjective, theta, config: EstimatorConfig) -> np.ndarray:
    """
    Bias E[g] - grad F(theta) by averaging the noiseless estimate over the full
    support of a two-point scheme (symmetric or asymmetric Bernoulli).

    Raises:
        ConfigurationError: objective is noisy
        EnumerationError: scheme is not two-point or d > 12
    """
    _require_noiseless(objective)
    theta = objective.check_point(theta)
    gradient = objective.true_gradient(theta)
    if config.side is EstimatorSide.FDSA:
        shifts = config.delta * np.eye(objective.dim)
        values = objective.true_value_batch(np.concatenate([theta + shifts, theta - shifts]))
        return (values[:objective.dim] - values[objective.dim:]) / (2.0 * config.delta) - gradient

    support = enumerate_two_point(config.scheme, objective.dim)
    totals = directional_sums(objective, theta, support.u, config, None, config.delta)
    mean = (support.probabilities * totals / config.delta) @ support.v
    return mean - gradient


def monte_carlo_bias(objective: NoisyObjective, theta, config: EstimatorConfig, rng: RngStream,
                     samples: int, chunk: int = MC_CHUNK) -> Tuple[np.ndarray, np.ndarray]:
    """
    Monte-Carlo bias and its per-coordinate standard error.

    Returns:
        (bias, standard_error), both of length d
    """
    theta = objective.check_point(theta)
    gradient = objective.true_gradient(theta)
    d = objective.dim
    if samples < 2:
        raise ConfigurationError(f"Monte-Carlo bias needs at least 2 samples, got {samples}")

    total = np.zeros(d)
    total_sq = np.zeros(d)
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        if config.side is EstimatorSide.FDSA:
            residual = sample_estimates(objective, theta, config, rng, size) - gradient
        else:
            u, v = sample_uv_batch(config.scheme, d, rng, size)
            totals = directional_sums(objective, theta, u, config, rng, config.delta)
            residual = v * (totals / config.delta - u @ gradient)[:, None]
        total += residual.sum(axis=0)
        total_sq += (residual ** 2).sum(axis=0)
        done += size

    mean = total / samples
    variance = np.maximum(total_sq / samples - mean ** 2, 0.0) * samples / (samples - 1)
    return mean, np.sqrt(variance / samples)


def leading_bias_order(config: EstimatorConfig) -> int:
    """
    First power of delta that survives in the bias.

    For symmetric directions all odd moments vanish, which removes the delta^k1
    term of an odd-order one-sided estimator.
    """
    if config.side is EstimatorSide.FDSA:
        return 2
    if config.side is EstimatorSide.BALANCED:
        return 2 * config.order
    k1 = config.order
    if config.scheme.is_symmetric and k1 % 2 == 1:
        return k1 + 1
    return k1


def order_test_objective(d: int, config: EstimatorConfig) -> RidgePowerObjective:
    """Minimal-degree test function whose leading bias term is nonzero."""
    return RidgePowerObjective(np.ones(d), leading_bias_order(config) + 1)


def _fit_slope(deltas: np.ndarray, values: np.ndarray) -> Tuple[float, float, float]:
    x = np.log(deltas)
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), residual


def _check_grid(deltas: Sequence[float], upper: Optional[float]) -> np.ndarray:
    grid = np.asarray(deltas, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ConfigurationError("Delta grid needs at least two points")
    if np.any(grid <= 0) or (upper is not None and np.any(grid > upper)):
        bound = f"(0, {upper:g}]" if upper is not None else "(0, inf)"
        raise ConfigurationError(f"Delta grid must lie in {bound}")
    if np.any(np.diff(grid) >= 0):
        raise ConfigurationError("Delta grid must be strictly decreasing")
    return grid


def bias_order_sweep(test_fn: NoisyObjective, theta, config: EstimatorConfig, deltas: Sequence[float],
                     mc_samples: int = 10 ** 6, seed: int = 0) -> SweepReport:
    """
    Bias norm over a delta grid and its log-log slope.

    Two-point schemes in d <= 12 are enumerated exactly; other schemes use
    Monte Carlo with the same seed at every delta. Any bias below 1e-13 gives
    the verdict "exact" instead of a slope.
    """
    grid = _check_grid(deltas, upper=1.0)
    _require_noiseless(test_fn)
    theta = test_fn.check_point(theta)
    enumerate_exactly = (
        config.side is EstimatorSide.FDSA
        or (config.scheme.is_two_point and test_fn.dim <= 12)
    )

    values = np.empty(grid.size)
    errors = None if enumerate_exactly else np.empty(grid.size)
    for i, delta in enumerate(grid):
        scaled = config.with_delta(float(delta))
        if enumerate_exactly:
            bias = exact_bias_bernoulli(test_fn, theta, scaled)
            values[i] = np.linalg.norm(bias)
        else:
            bias, se = monte_carlo_bias(test_fn, theta, scaled, RngStream(seed), mc_samples)
            values[i] = np.linalg.norm(bias)
            errors[i] = np.linalg.norm(se)

    metadata = {
        'estimator': config.describe(),
        'test_function': test_fn.describe(),
        'method': 'enumeration' if enumerate_exactly else f'monte-carlo({mc_samples})',
    }
    expected = leading_bias_order(config)
    if np.any(values < EXACT_THRESHOLD):
        logger.info("Bias sweep is exact for %s", config.describe())
        return SweepReport('bias', grid, values, SweepVerdict.EXACT, expected_order=expected,
                           standard_errors=errors, metadata=metadata)

    slope, intercept, residual = _fit_slope(grid, values)
    logger.info("Bias sweep slope %.3f (expected %d) for %s", slope, expected, config.describe())
    return SweepReport('bias', grid, values, SweepVerdict.SLOPE, slope, intercept, residual,
                       expected_order=expected, standard_errors=errors, metadata=metadata)


def variance_scaling_sweep(objective: NoisyObjective, theta, config: EstimatorConfig, deltas: Sequence[float],
                           mc_samples: int = 10 ** 5, seed: int = 0) -> SweepReport:
    """
    Trace of the estimate covariance over a delta grid and its log-log slope.

    Expected slope is about -2 when measurement noise dominates.
    """
    grid = _check_grid(deltas, upper=None)
    if mc_samples < 2:
        raise ConfigurationError(f"Variance sweep needs at least 2 samples, got {mc_samples}")
    theta = objective.check_point(theta)

    values = np.empty(grid.size)
    for i, delta in enumerate(grid):
        estimates = sample_estimates(objective, theta, config.with_delta(float(delta)), RngStream(seed), mc_samples)
        values[i] = float(np.var(estimates, axis=0, ddof=1).sum())

    slope, intercept, residual = _fit_slope(grid, values)
    logger.info("Variance sweep slope %.3f for %s", slope, config.describe())
    return SweepReport('variance', grid, values, SweepVerdict.SLOPE, slope, intercept, residual,
                       metadata={'estimator': config.describe(), 'objective': objective.describe(),
                                 'samples': mc_samples})


def bias_by_order(objective: NoisyObjective, theta, scheme: PerturbationScheme, delta: float,
                  orders: Sequence[int] = (1, 2, 3, 4)) -> Dict[int, float]:
    """Enumerated one-sided bias norm for each order at a fixed delta."""
    return {
        k1: float(np.linalg.norm(exact_bias_bernoulli(objective, theta, EstimatorConfig.one_sided(k1, scheme, delta))))
        for k1 in orders
    }


def identity_check(kmax: int) -> IdentityReport:
    """
    Verify the combinatorial identities behind the coefficient tables in exact
    arithmetic for every k <= kmax, plus the float sum rules of the tables.
    """
    if isinstance(kmax, bool) or not isinstance(kmax, (int, np.integer)) or not 1 <= kmax <= MAX_IDENTITY_ORDER:
        raise ConfigurationError(f"kmax must lie in [1, {MAX_IDENTITY_ORDER}], got {kmax!r}")
    kmax = int(kmax)
    report = IdentityReport(kmax=kmax)

    for k in range(1, kmax + 1):
        # (i) sum_j (1/j) binom(k,j) (-1)^(j+1) = H_k
        harmonic = sum((Fraction((-1) ** (j + 1) * math.comb(k, j), j) for j in range(1, k + 1)), Fraction(0))
        report.record('harmonic', k, harmonic == harmonic_number(k))

        # (ii) sum_j (-1)^(j+1) binom(k,j) = 1
        alternating = sum((-1) ** (j + 1) * math.comb(k, j) for j in range(1, k + 1))
        report.record('alternating_binomial', k, alternating == 1)

        # (iii) sum_j (-1)^(k-j) binom(k,j) j^q = 0 for 0 < q < k
        for q in range(1, k):
            power_sum = sum((-1) ** (k - j) * math.comb(k, j) * j ** q for j in range(k + 1))
            report.record('finite_difference', k, power_sum == 0, q)

        # (iv) sum_i (-1)^i binom(2k+1, k-i) (2i+1) = 0
        odd_sum = sum((-1) ** i * math.comb(2 * k + 1, k - i) * (2 * i + 1) for i in range(k + 1))
        report.record('odd_binomial', k, odd_sum == 0)

        # (v) sum_j (-1)^j sum_{i>=j} K_i binom(2i+1, i-j) (2j+1)^q = 0, odd 1 < q <= 2k+1
        balanced = [
            (-1) ** j * sum((kappa(i) * math.comb(2 * i + 1, i - j) for i in range(j, k + 1)), Fraction(0))
            for j in range(k + 1)
        ]
        for q in range(3, 2 * k + 2, 2):
            rule = sum((b * (2 * j + 1) ** q for j, b in enumerate(balanced)), Fraction(0))
            report.record('balanced_odd_power', k, rule == 0, q)

        _check_table_rules(report, k)

    return report


def _check_table_rules(report: IdentityReport, k: int):
    """Exact and float sum rules of the generated coefficient tables."""
    weights = onesided_coefficients(k).weights
    offsets = np.arange(k + 1, dtype=float)
    report.record('onesided_exact', k, onesided_sum_rule(k, 0) == 0 and onesided_sum_rule(k, 1) == 1
                  and all(onesided_sum_rule(k, q) == 0 for q in range(2, k + 1)))
    float_ok = abs(weights.sum()) <= FLOAT_RULE_TOLERANCE and abs(weights @ offsets - 1.0) <= FLOAT_RULE_TOLERANCE
    # higher powers are checked relative to the size of the summands
    for q in range(2, k + 1):
        scale = np.abs(weights) @ offsets ** q
        float_ok = float_ok and abs(weights @ offsets ** q) <= FLOAT_RULE_TOLERANCE * max(1.0, scale)
    report.record('onesided_float', k, float_ok)

    if k <= 8:
        b = balanced_coefficients(k).weights
        odd = 2.0 * np.arange(k) + 1.0
        report.record('balanced_exact', k, balanced_sum_rule(k, 1) == 1
                      and all(balanced_sum_rule(k, q) == 0 for q in range(3, 2 * k, 2)))
        float_ok = abs(b @ odd - 1.0) <= FLOAT_RULE_TOLERANCE
        for q in range(3, 2 * k, 2):
            scale = np.abs(b) @ odd ** q
            float_ok = float_ok and abs(b @ odd ** q) <= FLOAT_RULE_TOLERANCE * max(1.0, scale)
        report.record('balanced_float', k, float_ok)


def family_z_threshold(entries: int, alarm: float = SINGLE_ENTRY_ALARM) -> float:
    """Per-entry |z| threshold giving a family-wise false-alarm rate `alarm`."""
    return NormalDist().inv_cdf(1.0 - alarm / (2.0 * max(entries, 1)))


def moment_check(scheme: PerturbationScheme, d: int, rng: RngStream, samples: int = 10 ** 6,
                 chunk: int = MC_CHUNK, family_wise: bool = True) -> MomentReport:
    """
    Monte-Carlo check of E[V U^T] = I and E[V] = 0.

    Entries with zero sample variance must match their target exactly; the rest
    must lie within the z threshold (3 standard errors for a single entry,
    corrected for the number of distinct entries when family_wise is set).
    """
    if samples < 2:
        raise ConfigurationError(f"Moment check needs at least 2 samples, got {samples}")
    sum_vu = np.zeros((d, d))
    sum_vu_sq = np.zeros((d, d))
    sum_v = np.zeros(d)
    sum_v_sq = np.zeros(d)
    plus = 0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        u, v = sample_uv_batch(scheme, d, rng, size)
        outer = v[:, :, None] * u[:, None, :]
        sum_vu += outer.sum(axis=0)
        sum_vu_sq += (outer ** 2).sum(axis=0)
        sum_v += v.sum(axis=0)
        sum_v_sq += (v ** 2).sum(axis=0)
        if scheme.kind is PerturbationKind.SYMMETRIC_BERNOULLI:
            plus += int(np.count_nonzero(u > 0))
        done += size

    mean_vu = sum_vu / samples
    mean_v = sum_v / samples
    se_vu = np.sqrt(np.maximum(sum_vu_sq / samples - mean_vu ** 2, 0.0) / (samples - 1))
    se_v = np.sqrt(np.maximum(sum_v_sq / samples - mean_v ** 2, 0.0) / (samples - 1))

    # V = cU makes V U^T symmetric; test the upper triangle once
    rows, cols = np.triu_indices(d)
    deviations = np.concatenate([(mean_vu - np.eye(d))[rows, cols], mean_v])
    errors = np.concatenate([se_vu[rows, cols], se_v])
    threshold = family_z_threshold(deviations.size) if family_wise else 3.0

    degenerate = errors <= 1e-15 * np.maximum(1.0, np.abs(deviations))
    exact_ok = bool(np.all(np.abs(deviations[degenerate]) <= 1e-12))
    z = np.abs(deviations[~degenerate]) / errors[~degenerate]
    max_z = float(z.max()) if z.size else 0.0
    plus_fraction = plus / (samples * d) if scheme.kind is PerturbationKind.SYMMETRIC_BERNOULLI else None

    passed = exact_ok and max_z <= threshold
    if plus_fraction is not None:
        passed = passed and 0.498 <= plus_fraction <= 0.502
    logger.info("Moment check %s d=%d: max |z| %.2f (threshold %.2f), passed=%s", scheme, d, max_z, threshold, passed)
    return MomentReport(str(scheme), d, samples, mean_vu, se_vu, mean_v, se_v, max_z, threshold, passed, plus_fraction)
