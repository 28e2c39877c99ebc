#!/usr/bin/env python3
"""
Smoke Tests for the run_experiments.py command-line interface.

Each test runs the script in a subprocess with --json and checks the exit
code and the single JSON document on stdout (or the error payload on stderr).
"""

import asyncio
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from src.test import TEST_CONFIG, TEST_RESULT_FILES
from src.test.smoke_suite import SmokeSuite, project_root, run_suite

SCRIPT = str(Path(project_root) / 'run_experiments.py')


def run_cli(*args: str, cwd: str = None) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, SCRIPT, *args], capture_output=True, text=True,
                          timeout=TEST_CONFIG['cli_timeout'], cwd=cwd or project_root)


def stdout_json(result: subprocess.CompletedProcess) -> dict:
    assert result.returncode == 0, f"exit {result.returncode}: {result.stderr.strip()[-500:]}"
    return json.loads(result.stdout)


def stderr_json(result: subprocess.CompletedProcess) -> dict:
    # the error document is the last stderr line; log lines may precede it
    return json.loads(result.stderr.strip().splitlines()[-1])


class CliSmokeTests(SmokeSuite):
    """Smoke tests for the CLI subcommands."""

    suite_name = "CLI"
    results_file = TEST_RESULT_FILES['cli']

    def test_methods(self):
        return [
            self.test_help,
            self.test_identities,
            self.test_coefficients,
            self.test_estimate,
            self.test_optimize,
            self.test_optimize_determinism,
            self.test_experiment,
            self.test_error_exits,
            self.test_config_file,
            self.test_table,
            self.test_bias_sweep,
            self.test_variance_sweep,
            self.test_moments,
        ]

    def test_help(self):
        """Test 1: Help is available for the tool and its subcommands."""
        for args in (['--help'], ['optimize', '--help'], ['table', '--help']):
            result = run_cli(*args)
            assert result.returncode == 0, args
            assert 'usage' in result.stdout.lower()
        self.log_test("Help", "PASS", "Help texts print")

    def test_identities(self):
        """Test 2: identities --kmax 8 passes."""
        payload = stdout_json(run_cli('identities', '--kmax', '8', '--json'))
        assert payload['all_passed'] is True
        assert payload['kmax'] == 8

        result = run_cli('identities', '--kmax', '2', '--verbose', '--json')
        assert stdout_json(result)['all_passed'] is True
        assert 'Runtime configuration' in result.stderr and '"divergence_guard"' in result.stderr
        self.log_test("Identities", "PASS", "All identities hold")

    def test_coefficients(self):
        """Test 3: coefficients prints one row per weight."""
        payload = stdout_json(run_cli('coefficients', '--kind', 'balanced', '--kmax', '2', '--json'))
        rows = payload['tables']['balanced']
        assert len(rows) == 3
        assert [row['exact'] for row in rows if row['k'] == 2] == ['9/8', '-1/24']
        self.log_test("Coefficients", "PASS", "Balanced table for k2 <= 2")

    def test_estimate(self):
        """Test 4: One k1 = 2 estimate on the noiseless quadratic is V (U . grad F)."""
        payload = stdout_json(run_cli('estimate', '--method', 'gspsa', '--k', '2', '--objective', 'quadratic',
                                      '--dim', '2', '--sigma', '0', '--delta', '0.1', '--seed', '7', '--json'))
        assert payload['measurements'] == 3
        assert payload['true_gradient'] == [1.0, 1.0]
        gradient = np.array(payload['gradient'])
        assert np.allclose(gradient, [2.0, 2.0]) or np.allclose(gradient, [0.0, 0.0], atol=1e-12), gradient
        self.log_test("Estimate", "PASS", f"gradient {gradient.tolist()}")

    def test_optimize(self):
        """Test 5: Budget 2000 at 4 measurements per step gives 500 iterations."""
        payload = stdout_json(run_cli('optimize', '--method', 'bgspsa', '--k2', '2', '--objective', 'quadratic',
                                      '--dim', '5', '--sigma', '0.001', '--budget', '2000', '--seed', '1', '--json'))
        assert payload['iterations'] == 500
        assert payload['measurements_used'] == 2000
        assert payload['parameter_error'] is not None and payload['parameter_error'] < 1.0
        assert payload['provenance']['method'] == 'bgspsa'
        assert payload['provenance']['schedule'] == '1/(n+65)^1 | 26.8/n^0.101'
        self.log_test("Optimize", "PASS", f"parameter error {payload['parameter_error']:.3e}")

    def test_optimize_determinism(self):
        """Test 6: Same seed, same output."""
        args = ['optimize', '--method', 'gspsa', '--k', '3', '--objective', 'rastrigin', '--dim', '3',
                '--budget', '4000', '--seed', '42', '--json']
        first = stdout_json(run_cli(*args))
        second = stdout_json(run_cli(*args))
        assert first['final_theta'] == second['final_theta']
        self.log_test("Optimize Determinism", "PASS", "Identical final iterates")

    def test_experiment(self):
        """Test 7: experiment writes replications with seeds base + r."""
        with tempfile.TemporaryDirectory() as tmp:
            payload = stdout_json(run_cli('experiment', '--method', 'gspsa', '--k', '2', '--objective', 'quadratic',
                                          '--dim', '3', '--budget', '3000', '--reps', '3', '--seed', '10',
                                          '--out', tmp, '--json'))
            frame = pd.read_csv(Path(tmp) / 'replications.csv')
            assert list(frame['seed']) == [10, 11, 12]
            assert set(frame['budget']) == {3000}
            assert payload['replications'] == 3 and payload['excluded'] == 0
            assert np.isclose(frame['parameter_error'].mean(), payload['mean_error'])
            assert (Path(tmp) / 'summary.json').is_file()
        self.log_test("Experiment", "PASS", "Replications written with provenance")

    def test_error_exits(self):
        """Test 8: Configuration errors exit 2, domain failures exit 1, both with a JSON payload."""
        result = run_cli('estimate', '--dim', '0', '--json')
        assert result.returncode == 2, result.returncode
        error = stderr_json(result)
        assert error['status'] == 'error' and error['error'] == 'ConfigurationError'

        result = run_cli('optimize', '--objective', 'quadratic', '--dim', '2', '--sigma', '0.1',
                         '--schedule-mode', 'constant', '--a', '100', '--delta', '0.1', '--budget', '2000', '--json')
        assert result.returncode == 1, result.returncode
        error = stderr_json(result)
        assert error['error'] == 'DivergenceError'
        assert error['iteration'] >= 1 and len(error['last_theta']) == 2

        result = run_cli('estimate', '--scheme', 'cauchy', '--json')
        assert result.returncode == 2

        for args in (['table', 'no-such-table'], ['estimate', '--dim', 'abc', '--json'], ['no-such-command']):
            result = run_cli(*args)
            assert result.returncode == 2, (args, result.returncode)
            error = stderr_json(result)
            assert error['status'] == 'error' and error['error'] == 'ConfigurationError', args
            assert error['schema_version'] == 1
        assert 'no-such-table' in stderr_json(run_cli('table', 'no-such-table'))['message']
        self.log_test("Error Exits", "PASS", "Exit codes 2 and 1 with error payloads")

    def test_config_file(self):
        """Test 9: Config file values are defaults; explicit flags win; unknown keys are rejected."""
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.env'
            config.write_text("objective=quadratic\ndim=3\nsigma=0\nk1=2\n")
            payload = stdout_json(run_cli('estimate', '--config', str(config), '--dim', '2', '--json'))
            assert len(payload['theta']) == 2
            assert payload['objective'].startswith('quadratic')
            assert payload['measurements'] == 3

            payload = stdout_json(run_cli('estimate', '--config', str(config), '--json'))
            assert len(payload['theta']) == 3

            bad = Path(tmp) / 'bad.env'
            bad.write_text("colour=blue\n")
            result = run_cli('estimate', '--config', str(bad), '--json')
            assert result.returncode == 2
            assert 'colour' in stderr_json(result)['message']
        self.log_test("Config File", "PASS", "Precedence and validation verified")

    def test_table(self):
        """Test 10: A scaled-down table run produces every cell."""
        with tempfile.TemporaryDirectory() as tmp:
            payload = stdout_json(run_cli('table', 'bgspsa', '--scale', '0.01', '--reps', '2', '--dims', '5',
                                          '--out', tmp, '--json'))
            assert len(payload['cells']) == 4
            assert {cell['budget'] for cell in payload['cells']} == {2000}
            assert len(pd.read_csv(Path(tmp) / 'cells.csv')) == 4
            assert (Path(tmp) / 'table.txt').is_file()
        self.log_test("Table", "PASS", "4 cells for bgspsa at d=5")

    def test_bias_sweep(self):
        """Test 11: bias-sweep reports the leading order of a k1 = 2 estimator."""
        payload = stdout_json(run_cli('bias-sweep', '--method', 'gspsa', '--k', '2', '--json'))
        assert payload['verdict'] == 'slope'
        assert payload['expected_order'] == 2
        assert abs(payload['slope'] - 2) <= 0.3
        assert len(payload['rows']) == 4
        self.log_test("Bias Sweep", "PASS", f"slope {payload['slope']:.3f}")

    def test_variance_sweep(self):
        """Test 12: variance-sweep slope is near -2."""
        payload = stdout_json(run_cli('variance-sweep', '--method', 'bgspsa', '--k', '2',
                                      '--mc-samples', '2e4', '--json'))
        assert -2.3 <= payload['slope'] <= -1.7, payload['slope']
        self.log_test("Variance Sweep", "PASS", f"slope {payload['slope']:.3f}")

    def test_moments(self):
        """Test 13: moments reports one check per scheme and dimension."""
        result = run_cli('moments', '--schemes', 'gaussian,uniform:2', '--dims', '2', '--samples', '1e5', '--json')
        assert result.returncode in (0, 1), result.stderr
        payload = json.loads(result.stdout)
        assert [check['scheme'] for check in payload['checks']] == ['gaussian', 'uniform:2']
        assert (result.returncode == 0) == payload['all_passed']
        self.log_test("Moments", "PASS", "Checks reported per scheme")


def test_cli_suite():
    assert asyncio.run(CliSmokeTests().run_all_tests())


if __name__ == "__main__":
    run_suite(CliSmokeTests())
