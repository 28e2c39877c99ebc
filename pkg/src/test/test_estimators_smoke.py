#!/usr/bin/env python3
"""
Smoke Tests for coefficient tables and gradient estimators.

Covers the published weights, the sum rules, measurement counts and the
exactness of each estimator on polynomials of matching degree.
"""

import asyncio
from fractions import Fraction

import numpy as np

from src.test import TEST_CONFIG, TEST_RESULT_FILES
from src.test.smoke_suite import SmokeSuite, run_suite

from src.models.errors import ConfigurationError, NumericalError
from src.models.estimator_config import EstimatorConfig
from src.models.perturbation import PerturbationScheme
from src.models.rng_stream import RngStream
from src.services.coefficients import (
    balanced_coefficients,
    balanced_sum_rule,
    coefficient_table,
    onesided_coefficients,
    onesided_sum_rule,
)
from src.services.diagnostics import identity_check
from src.services.gradient_estimators import (
    bgspgs_estimate,
    estimate_gradient,
    estimate_with_direction,
    fdsa_estimate,
    gspgs_estimate,
    sample_estimates,
)
from src.services.objectives import (
    CountingObjective,
    RidgePowerObjective,
    make_quadratic,
    random_polynomial,
)
from src.services.perturbations import sample_uv

SCHEMES = [
    PerturbationScheme.bernoulli(),
    PerturbationScheme.gaussian(),
    PerturbationScheme.sphere(),
    PerturbationScheme.uniform(1.0),
    PerturbationScheme.asymmetric_bernoulli(0.5),
]


def F(numerator: int, denominator: int = 1) -> Fraction:
    return Fraction(numerator, denominator)


class EstimatorSmokeTests(SmokeSuite):
    """Smoke tests for coefficient tables and the three estimator families."""

    suite_name = "Estimator"
    results_file = TEST_RESULT_FILES['estimators']

    def test_methods(self):
        return [
            self.test_onesided_weights,
            self.test_balanced_weights,
            self.test_sum_rules,
            self.test_identities,
            self.test_coefficient_tables,
            self.test_measurement_counts,
            self.test_exactness_on_polynomials,
            self.test_degree_above_order_is_not_exact,
            self.test_non_finite_measurement,
            self.test_invalid_inputs,
            self.test_fixed_direction_estimates,
            self.test_determinism,
            self.test_noise_is_unbiased,
        ]

    def test_onesided_weights(self):
        """Test 1: One-sided weights for k1 = 1, 2, 3."""
        assert onesided_coefficients(1).exact == (F(-1), F(1))
        assert onesided_coefficients(2).exact == (F(-3, 2), F(2), F(-1, 2))
        assert onesided_coefficients(3).exact == (F(-11, 6), F(3), F(-3, 2), F(1, 3))
        assert np.allclose(onesided_coefficients(2).weights, [-1.5, 2.0, -0.5])
        assert onesided_coefficients(4).measurements == 5

        weights = onesided_coefficients(2).weights
        assert not weights.flags.writeable
        try:
            weights[0] = 0.0
        except ValueError:
            pass
        else:
            raise AssertionError("coefficient weights are writable")
        self.log_test("One-Sided Weights", "PASS", "k1 = 1..3 match the closed form")

    def test_balanced_weights(self):
        """Test 2: Balanced weights for k2 = 1, 2."""
        assert balanced_coefficients(1).exact == (F(1),)
        assert balanced_coefficients(2).exact == (F(9, 8), F(-1, 24))
        assert np.allclose(balanced_coefficients(2).measurement_weights, [27 / 48, -1 / 48])
        assert np.allclose(balanced_coefficients(3).offsets, [1.0, 3.0, 5.0])
        assert balanced_coefficients(3).measurements == 6
        self.log_test("Balanced Weights", "PASS", "k2 = 1, 2 match the closed form")

    def test_sum_rules(self):
        """Test 3: Moment sum rules hold exactly, first surviving term has the known value."""
        for k1 in range(1, 9):
            assert onesided_sum_rule(k1, 0) == 0
            assert onesided_sum_rule(k1, 1) == 1
            for q in range(2, k1 + 1):
                assert onesided_sum_rule(k1, q) == 0, (k1, q)
            factorial = 1
            for j in range(2, k1 + 1):
                factorial *= j
            assert onesided_sum_rule(k1, k1 + 1) == (-1) ** (k1 + 1) * factorial, k1

        for k2 in range(1, 6):
            assert balanced_sum_rule(k2, 1) == 1
            for q in range(3, 2 * k2, 2):
                assert balanced_sum_rule(k2, q) == 0, (k2, q)
            assert balanced_sum_rule(k2, 2 * k2 + 1) != 0
        assert balanced_sum_rule(2, 5) == -9
        self.log_test("Sum Rules", "PASS", "Exact sum rules hold for k1 <= 8 and k2 <= 5")

    def test_identities(self):
        """Test 4: The combinatorial identity report passes up to k = 8."""
        report = identity_check(8)
        assert report.all_passed, report.failures()
        summary = report.to_summary()
        assert summary['failures'] == []
        for name in ('harmonic', 'alternating_binomial', 'finite_difference', 'odd_binomial',
                     'balanced_odd_power', 'onesided_exact', 'onesided_float',
                     'balanced_exact', 'balanced_float'):
            assert summary['identities'][name] is True, name
        for bad in (0, 13, 2.5, True):
            try:
                identity_check(bad)
            except ConfigurationError:
                continue
            raise AssertionError(f"identity_check({bad!r}) did not raise")
        self.log_test("Identities", "PASS", "All identities pass for k <= 8")

    def test_coefficient_tables(self):
        """Test 5: Audit tables have one row per weight."""
        onesided = coefficient_table('onesided', 3)
        assert len(onesided) == 9
        assert list(onesided.columns) == ['k', 'index', 'offset', 'exact', 'value']
        row = onesided[(onesided['k'] == 3) & (onesided['index'] == 0)].iloc[0]
        assert row['exact'] == '-11/6'

        balanced = coefficient_table('balanced', 2)
        assert len(balanced) == 3
        assert list(balanced[balanced['k'] == 2]['offset']) == [1, 3]

        for kind, kmax in (('central', 2), ('balanced', 9), ('onesided', 0)):
            try:
                coefficient_table(kind, kmax)
            except ConfigurationError:
                continue
            raise AssertionError(f"coefficient_table({kind!r}, {kmax}) did not raise")
        self.log_test("Coefficient Tables", "PASS", "Row counts and offsets are correct")

    def test_measurement_counts(self):
        """Test 6: Each estimate spends exactly its documented number of measurements."""
        theta = np.zeros(5)
        cases = [
            (EstimatorConfig.one_sided(1), 2),
            (EstimatorConfig.one_sided(3), 4),
            (EstimatorConfig.balanced(1), 2),
            (EstimatorConfig.balanced(2), 4),
            (EstimatorConfig.fdsa(0.1), 10),
        ]
        for config, expected in cases:
            objective = CountingObjective(make_quadratic(5, sigma=0.1))
            result = estimate_gradient(objective, theta, config, RngStream(3))
            assert objective.evaluations == expected, config.describe()
            assert result.measurements == expected
            assert config.measurements_per_iteration(5) == expected
        self.log_test("Measurement Counts", "PASS", "k1+1, 2 k2 and 2d measurements per estimate")

    def test_exactness_on_polynomials(self):
        """Test 7: For any fixed direction the estimate is V (U . grad F) on polynomials of matching degree."""
        stream = RngStream(2024)
        count = 0
        for t in range(TEST_CONFIG['exactness_polynomials']):
            d = 1 + t % 4
            theta = stream.uniform(-1.0, 1.0, d)
            configs = []
            for k1 in range(1, 5):
                configs.append((k1, EstimatorConfig.one_sided(k1, delta=0.1)))
            for k2 in (1, 2):
                configs.append((2 * k2, EstimatorConfig.balanced(k2, delta=0.1)))
            for degree, base in configs:
                polynomial = random_polynomial(d, degree, stream.spawn(count))
                for scheme in SCHEMES:
                    config = EstimatorConfig(base.side, base.order, scheme, base.delta)
                    u, v = sample_uv(scheme, d, stream)
                    target = v * (u @ polynomial.true_gradient(theta))
                    result = estimate_with_direction(polynomial, theta, config, u, v)
                    tolerance = 1e-10 * np.maximum(1.0, np.abs(target))
                    assert np.all(np.abs(result.gradient - target) <= tolerance), (
                        f"{config.describe()} degree {degree}: {result.gradient} vs {target}"
                    )
                count += 1
        self.log_test("Polynomial Exactness", "PASS", f"{count} polynomials x {len(SCHEMES)} schemes exact")

    def test_degree_above_order_is_not_exact(self):
        """Test 8: One degree above the order leaves a visible error."""
        theta = np.zeros(2)
        u = np.ones(2)
        for config, degree in ((EstimatorConfig.one_sided(2), 3), (EstimatorConfig.balanced(1), 3)):
            objective = RidgePowerObjective(np.ones(2), degree)
            result = estimate_with_direction(objective, theta, config, u, u)
            # directional derivative of (1^T theta)^3 at 0 is zero
            assert np.all(np.abs(result.gradient) > 1e-4), config.describe()
        self.log_test("Beyond Exactness", "PASS", "Degree k+1 is not reproduced exactly")

    def test_non_finite_measurement(self):
        """Test 9: Overflowing objectives raise NumericalError with the offending point."""
        objective = RidgePowerObjective(np.ones(2), 400)
        with np.errstate(over='ignore', invalid='ignore'):
            try:
                gspgs_estimate(objective, np.full(2, 10.0), EstimatorConfig.one_sided(1), RngStream(0))
            except NumericalError as e:
                assert e.point is not None and e.point.shape == (2,)
                assert 'point' in e.to_dict()
            else:
                raise AssertionError("overflow did not raise NumericalError")
        self.log_test("Non-Finite Measurements", "PASS", "NumericalError raised on overflow")

    def test_invalid_inputs(self):
        """Test 10: Wrong estimator side, wrong theta shape and bad orders are rejected."""
        objective = make_quadratic(3)
        rng = RngStream(0)
        bad = [
            lambda: gspgs_estimate(objective, np.zeros(3), EstimatorConfig.balanced(1), rng),
            lambda: bgspgs_estimate(objective, np.zeros(3), EstimatorConfig.one_sided(1), rng),
            lambda: gspgs_estimate(objective, np.zeros(4), EstimatorConfig.one_sided(1), rng),
            lambda: estimate_gradient(objective, [0.0, np.nan, 0.0], EstimatorConfig.one_sided(1), rng),
            lambda: fdsa_estimate(objective, np.zeros(3), 0.0, rng),
            lambda: EstimatorConfig.one_sided(0),
            lambda: EstimatorConfig.one_sided(13),
            lambda: EstimatorConfig.balanced(9),
            lambda: EstimatorConfig.one_sided(1, delta=-0.1),
            lambda: sample_estimates(objective, np.zeros(3), EstimatorConfig.one_sided(1), None, 10),
        ]
        for i, call in enumerate(bad):
            try:
                call()
            except ConfigurationError:
                continue
            raise AssertionError(f"case {i} did not raise ConfigurationError")
        self.log_test("Invalid Inputs", "PASS", f"{len(bad)} invalid calls rejected")

    def test_fixed_direction_estimates(self):
        """Test 11: Holding (U, V) fixed gives estimates parallel to V."""
        objective = make_quadratic(4, sigma=0.1)
        theta = np.full(4, 0.5)
        config = EstimatorConfig.one_sided(2, delta=0.1)
        u, v = sample_uv(config.scheme, 4, RngStream(1))
        estimates = sample_estimates(objective, theta, config, RngStream(2), 200, u=u, v=v)
        assert estimates.shape == (200, 4)
        ratios = estimates / v
        assert np.allclose(ratios, ratios[:, :1])
        assert np.std(ratios[:, 0]) > 0

        noiseless = sample_estimates(make_quadratic(4), theta, config, None, 5, u=u, v=v)
        assert np.allclose(noiseless, noiseless[0])
        self.log_test("Fixed Direction", "PASS", "Only the noise varies across rows")

    def test_determinism(self):
        """Test 12: Same seed, same estimate; different seed, different estimate."""
        objective = make_quadratic(5, sigma=0.1)
        theta = np.ones(5)
        for config in (EstimatorConfig.one_sided(2), EstimatorConfig.balanced(2), EstimatorConfig.fdsa(0.1)):
            first = estimate_gradient(objective, theta, config, RngStream(9)).gradient
            second = estimate_gradient(objective, theta, config, RngStream(9)).gradient
            third = estimate_gradient(objective, theta, config, RngStream(10)).gradient
            assert np.array_equal(first, second), config.describe()
            assert not np.array_equal(first, third), config.describe()
        self.log_test("Determinism", "PASS", "Estimates are reproducible from the seed")

    def test_noise_is_unbiased(self):
        """Test 13: With (U, V) fixed, noisy estimates average to the noiseless one within 4 standard errors."""
        objective = make_quadratic(4, sigma=0.01)
        theta = np.array([0.3, -0.2, 0.5, 0.1])
        samples = 100_000
        details = {}
        for config in (EstimatorConfig.one_sided(2, delta=0.1), EstimatorConfig.balanced(2, delta=0.1)):
            u, v = sample_uv(config.scheme, 4, RngStream(21))
            noiseless = estimate_with_direction(objective, theta, config, u, v, rng=None).gradient
            estimates = sample_estimates(objective, theta, config, RngStream(22), samples, u=u, v=v)
            se = estimates.std(axis=0, ddof=1) / np.sqrt(samples)
            z = np.abs(estimates.mean(axis=0) - noiseless) / se
            assert np.all(se > 0), config.describe()
            assert np.all(z <= 4.0), (config.describe(), z)
            details[config.describe()] = float(z.max())
        self.log_test("Noise Unbiased", "PASS", "Mean of noisy estimates matches the noiseless estimate", details)


def test_estimators_suite():
    assert asyncio.run(EstimatorSmokeTests().run_all_tests())


if __name__ == "__main__":
    run_suite(EstimatorSmokeTests())
