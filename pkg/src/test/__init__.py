"""
Test package for the gradient estimation toolkit

This package contains the smoke suites for each module, the CLI checks and the
full-scale table reproductions.

Test Modules:
- test_perturbations_smoke: scheme parsing, sampling, enumeration
- test_estimators_smoke: coefficient tables, estimator exactness, measurement counts
- test_objectives_smoke: objective values, gradients, noise model
- test_optimizer_smoke: schedules, budget accounting, divergence, Theorem-2 mode
- test_diagnostics_smoke: identities, bias and variance orders, moment conditions
- test_orchestrator_smoke: experiment cells, replications, table grids, result files
- test_cli_smoke: command-line subcommands and error payloads
- test_experiment_integration: full-budget table reproductions (minutes of CPU)

Usage:
    # Run individual test modules
    python -m src.test.test_estimators_smoke

    # Or use the main test runner
    python -m src.test.run_tests all

    # The smoke suites are also collected by pytest
    pytest src/test
"""

__version__ = "1.0.0"

# Test configuration constants
TEST_CONFIG = {
    'cli_timeout': 300,
    'integration_replications': 20,
    'moment_samples': 10 ** 6,
    'variance_samples': 10 ** 5,
    'exactness_polynomials': 50,
}

# Test result file names
TEST_RESULT_FILES = {
    'perturbations': 'perturbations_test_results.json',
    'estimators': 'estimators_test_results.json',
    'objectives': 'objectives_test_results.json',
    'optimizer': 'optimizer_test_results.json',
    'diagnostics': 'diagnostics_test_results.json',
    'orchestrator': 'orchestrator_test_results.json',
    'cli': 'cli_test_results.json',
    'integration': 'integration_test_results.json',
}
