#!/usr/bin/env python3
"""
Smoke Tests for the bias, variance and moment diagnostics.
"""

import asyncio

import numpy as np

from src.test import TEST_CONFIG, TEST_RESULT_FILES
from src.test.smoke_suite import SmokeSuite, run_suite

from src.models.errors import ConfigurationError, EnumerationError
from src.models.estimator_config import EstimatorConfig
from src.models.perturbation import PerturbationScheme
from src.models.rng_stream import RngStream
from src.services.diagnostics import (
    bias_by_order,
    bias_order_sweep,
    exact_bias_bernoulli,
    family_z_threshold,
    leading_bias_order,
    moment_check,
    monte_carlo_bias,
    order_test_objective,
    variance_scaling_sweep,
)
from src.services.objectives import PolynomialObjective, RidgePowerObjective, make_linear, make_quadratic

DELTAS = (0.2, 0.1, 0.05, 0.025)
SLOPE_TOLERANCE = 0.3

SYMMETRIC = PerturbationScheme.bernoulli()
ASYMMETRIC = PerturbationScheme.asymmetric_bernoulli(0.5)


class DiagnosticsSmokeTests(SmokeSuite):
    """Smoke tests for the estimator diagnostics."""

    suite_name = "Diagnostics"
    results_file = TEST_RESULT_FILES['diagnostics']

    def test_methods(self):
        return [
            self.test_leading_orders,
            self.test_bias_slopes,
            self.test_monte_carlo_slopes,
            self.test_cubic_monomial_slope,
            self.test_exact_verdict,
            self.test_monte_carlo_matches_enumeration,
            self.test_random_configurations_match_enumeration,
            self.test_bias_decreases_with_order,
            self.test_variance_slopes,
            self.test_moment_conditions,
            self.test_invalid_requests,
        ]

    def test_leading_orders(self):
        """Test 1: Leading bias order by estimator family and direction symmetry."""
        cases = [
            (EstimatorConfig.one_sided(1, SYMMETRIC), 2),
            (EstimatorConfig.one_sided(2, SYMMETRIC), 2),
            (EstimatorConfig.one_sided(3, SYMMETRIC), 4),
            (EstimatorConfig.one_sided(4, SYMMETRIC), 4),
            (EstimatorConfig.one_sided(1, ASYMMETRIC), 1),
            (EstimatorConfig.one_sided(3, ASYMMETRIC), 3),
            (EstimatorConfig.balanced(1), 2),
            (EstimatorConfig.balanced(2), 4),
            (EstimatorConfig.fdsa(), 2),
        ]
        for config, expected in cases:
            assert leading_bias_order(config) == expected, config.describe()
        assert order_test_objective(3, EstimatorConfig.one_sided(3)).degree == 5
        self.log_test("Leading Orders", "PASS", "Parity rule and balanced orders verified")

    def test_bias_slopes(self):
        """Test 2: Enumerated bias slopes match the leading order."""
        configs = [EstimatorConfig.one_sided(k1, scheme) for scheme in (SYMMETRIC, ASYMMETRIC) for k1 in range(1, 5)]
        configs += [EstimatorConfig.balanced(1), EstimatorConfig.balanced(2), EstimatorConfig.fdsa()]
        slopes = {}
        for config in configs:
            test_fn = order_test_objective(3, config)
            report = bias_order_sweep(test_fn, np.zeros(3), config, DELTAS)
            assert not report.is_exact, config.describe()
            assert report.metadata['method'] == 'enumeration'
            assert abs(report.fitted_slope - report.expected_order) <= SLOPE_TOLERANCE, (
                f"{config.describe()}: slope {report.fitted_slope:.3f}, expected {report.expected_order}"
            )
            if config.order:
                assert report.fitted_slope >= config.order - 0.2
            slopes[config.describe()] = round(report.fitted_slope, 3)
        self.log_test("Bias Slopes", "PASS", f"{len(configs)} estimators on their order", slopes)

    def test_monte_carlo_slopes(self):
        """Test 3: Continuous schemes fall back to Monte Carlo and still recover the order."""
        for scheme in (PerturbationScheme.gaussian(), PerturbationScheme.sphere(), PerturbationScheme.uniform(1.0)):
            for k1 in (1, 2):
                config = EstimatorConfig.one_sided(k1, scheme)
                report = bias_order_sweep(order_test_objective(3, config), np.zeros(3), config, DELTAS,
                                          mc_samples=10 ** 5, seed=4)
                assert report.metadata['method'] == 'monte-carlo(100000)'
                assert report.standard_errors is not None
                assert abs(report.fitted_slope - report.expected_order) <= SLOPE_TOLERANCE, (
                    config.describe(), report.fitted_slope)
        self.log_test("Monte Carlo Slopes", "PASS", "Gaussian, sphere and uniform orders recovered")

    def test_cubic_monomial_slope(self):
        """Test 4: theta_1^2 theta_2 at (1, 1) under k1 = 1 has slope of at least 0.8."""
        monomial = PolynomialObjective(2, [(1.0, (2, 1))])
        report = bias_order_sweep(monomial, np.ones(2), EstimatorConfig.one_sided(1), (0.1, 0.05, 0.025))
        assert report.fitted_slope >= 0.8, report.fitted_slope
        linear = make_linear([1.0, -2.0, 0.5])
        bias = exact_bias_bernoulli(linear, np.array([0.3, 0.1, -2.0]), EstimatorConfig.one_sided(1, delta=0.7))
        assert np.allclose(bias, 0.0, atol=1e-13)
        self.log_test("Cubic Monomial", "PASS", f"slope {report.fitted_slope:.3f}")

    def test_exact_verdict(self):
        """Test 5: A quadratic under a k1 = 2 estimator is reported exact."""
        report = bias_order_sweep(make_quadratic(3), np.full(3, 0.5), EstimatorConfig.one_sided(2), DELTAS)
        assert report.is_exact
        assert report.fitted_slope is None
        assert report.to_summary()['verdict'] == 'exact'

        bias = exact_bias_bernoulli(make_quadratic(3), np.full(3, 0.5), EstimatorConfig.balanced(1, delta=0.3))
        assert np.allclose(bias, 0.0, atol=1e-13)
        self.log_test("Exact Verdict", "PASS", "Degree within the exactness order gives zero bias")

    def test_monte_carlo_matches_enumeration(self):
        """Test 6: Monte-Carlo bias agrees with enumeration within 5 standard errors."""
        test_fn = RidgePowerObjective(np.ones(3), 3)
        config = EstimatorConfig.one_sided(2, SYMMETRIC, delta=0.1)
        exact = exact_bias_bernoulli(test_fn, np.zeros(3), config)
        estimate, se = monte_carlo_bias(test_fn, np.zeros(3), config, RngStream(12), 10 ** 5)
        assert np.all(se > 0)
        assert np.all(np.abs(estimate - exact) <= 5 * se), (estimate, exact, se)
        self.log_test("Monte Carlo Bias", "PASS", "Agrees with enumeration")

    def test_random_configurations_match_enumeration(self):
        """Test 7: Monte-Carlo bias matches enumeration within 4 standard errors on random configurations."""
        draws = np.random.default_rng(2024)
        details = []
        for trial in range(5):
            d = int(draws.integers(2, 5))
            k1 = int(draws.integers(1, 4))
            theta = draws.uniform(-0.5, 0.5, d)
            direction = draws.uniform(0.2, 1.0, d)
            scheme = SYMMETRIC if trial % 2 == 0 else ASYMMETRIC
            test_fn = RidgePowerObjective(direction, k1 + 2)
            config = EstimatorConfig.one_sided(k1, scheme, delta=0.2)
            exact = exact_bias_bernoulli(test_fn, theta, config)
            estimate, se = monte_carlo_bias(test_fn, theta, config, RngStream(40 + trial), 10 ** 5)
            assert np.all(np.abs(estimate - exact) <= 4 * se + 1e-12), (trial, estimate, exact, se)
            details.append({'d': d, 'k1': k1, 'scheme': scheme.to_string()})
        self.log_test("Random Configurations", "PASS", "Monte Carlo agrees with enumeration", {'cases': details})

    def test_bias_decreases_with_order(self):
        """Test 8: On (1^T theta)^6 the bias shrinks strictly with the order."""
        objective = RidgePowerObjective(np.ones(3), 6)
        theta = np.full(3, 1.0 / 3.0)
        for delta in (0.1, 0.05, 0.01):
            bias = bias_by_order(objective, theta, SYMMETRIC, delta, orders=(2, 3, 4))
            assert bias[2] > bias[3] > bias[4], (delta, bias)
        skewed = PerturbationScheme.asymmetric_bernoulli(1.0)
        for delta in (0.01, 0.001):
            bias = bias_by_order(objective, theta, skewed, delta)
            assert bias[1] > bias[2] > bias[3] > bias[4], (delta, bias)
        self.log_test("Bias By Order", "PASS", "Higher order, smaller bias")

    def test_variance_slopes(self):
        """Test 9: Estimate variance grows like delta^-2 at the optimum of the noisy quadratic."""
        objective = make_quadratic(5, sigma=0.1)
        theta_star = objective.optimum()
        slopes = {}
        for config in (EstimatorConfig.one_sided(1), EstimatorConfig.balanced(2)):
            report = variance_scaling_sweep(objective, theta_star, config, DELTAS,
                                            mc_samples=TEST_CONFIG['variance_samples'], seed=1)
            assert -2.3 <= report.fitted_slope <= -1.7, (config.describe(), report.fitted_slope)
            assert np.all(np.diff(report.values) > 0)
            slopes[config.describe()] = round(report.fitted_slope, 3)
        self.log_test("Variance Slopes", "PASS", "Slopes near -2", slopes)

    def test_moment_conditions(self):
        """Test 10: E[V U^T] = I and E[V] = 0 for every scheme."""
        schemes = [SYMMETRIC, PerturbationScheme.gaussian(), PerturbationScheme.sphere(),
                   PerturbationScheme.uniform(1.0), PerturbationScheme.asymmetric_bernoulli(0.1)]
        root = RngStream(2025)
        index = 0
        for scheme in schemes:
            for d in (2, 10):
                report = moment_check(scheme, d, root.spawn(index), samples=TEST_CONFIG['moment_samples'])
                index += 1
                entries = d * (d + 1) // 2 + d
                assert np.isclose(report.z_threshold, family_z_threshold(entries))
                # family-wise alarm of 1e-6
                assert report.max_z <= family_z_threshold(entries, alarm=1e-6), (str(scheme), d, report.max_z)
                assert np.allclose(report.mean_vu, np.eye(d), atol=0.02)
                if scheme is SYMMETRIC:
                    assert 0.498 <= report.plus_fraction <= 0.502
                else:
                    assert report.plus_fraction is None
        self.log_test("Moment Conditions", "PASS", f"{index} scheme/dimension pairs checked")

    def test_invalid_requests(self):
        """Test 11: Diagnostics reject noisy test functions, bad grids and infeasible enumeration."""
        quiet = make_quadratic(3)
        config = EstimatorConfig.one_sided(1)
        calls = [
            (lambda: bias_order_sweep(make_quadratic(3, sigma=0.1), np.zeros(3), config, DELTAS), ConfigurationError),
            (lambda: bias_order_sweep(quiet, np.zeros(3), config, (0.1, 0.2)), ConfigurationError),
            (lambda: bias_order_sweep(quiet, np.zeros(3), config, (2.0, 0.1)), ConfigurationError),
            (lambda: bias_order_sweep(quiet, np.zeros(3), config, (0.1,)), ConfigurationError),
            (lambda: variance_scaling_sweep(quiet, np.zeros(3), config, (0.1, -0.1)), ConfigurationError),
            (lambda: monte_carlo_bias(quiet, np.zeros(3), config, RngStream(0), 1), ConfigurationError),
            (lambda: exact_bias_bernoulli(quiet, np.zeros(3), EstimatorConfig.one_sided(1, PerturbationScheme.gaussian())),
             EnumerationError),
            (lambda: exact_bias_bernoulli(make_quadratic(13), np.zeros(13), config), EnumerationError),
            (lambda: moment_check(SYMMETRIC, 2, RngStream(0), samples=1), ConfigurationError),
        ]
        for i, (call, error) in enumerate(calls):
            try:
                call()
            except error:
                continue
            raise AssertionError(f"case {i} did not raise {error.__name__}")
        self.log_test("Invalid Requests", "PASS", f"{len(calls)} invalid requests rejected")


def test_diagnostics_suite():
    assert asyncio.run(DiagnosticsSmokeTests().run_all_tests())


if __name__ == "__main__":
    run_suite(DiagnosticsSmokeTests())
