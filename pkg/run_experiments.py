#!/usr/bin/env python3
"""
Gradient Estimation Experiments CLI Script.

This script provides a command-line interface to the generalized simultaneous
perturbation gradient estimators: coefficient audits, single estimates,
optimizer runs, seeded replications, table grids and bias/variance/moment
diagnostics.
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from dotenv import dotenv_values

# Add the src directory to the path
sys.path.append('src')

from src.config import BASE_SEED, LOG_LEVEL, MAX_CONCURRENT_JOBS, OUTPUT_DIR, get_runtime_config
from src.config.hyperparameters import DEFAULT_REPLICATIONS, DEFAULT_SIGMA, METHODS, OBJECTIVES, TABLES
from src.models.errors import ConfigurationError, GspgsError
from src.models.experiment import SCHEMA_VERSION, ExperimentConfig
from src.models.perturbation import PerturbationScheme
from src.models.rng_stream import RngStream
from src.repositories.result_repository import ResultRepository, cell_frame, format_table
from src.services.coefficients import coefficient_table
from src.services.diagnostics import (
    bias_order_sweep,
    identity_check,
    moment_check,
    order_test_objective,
    variance_scaling_sweep,
)
from src.services.experiment_orchestrator import ExperimentOrchestrator, OrchestratorConfig
from src.services.gradient_estimators import estimate_gradient
from src.services.objectives import make_objective
from src.tasks.replication.run_replication import execute_run

DEFAULT_MOMENT_SCHEMES = "bernoulli,gaussian,sphere,uniform,asym-bernoulli:0.1"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


def print_banner(args):
    """Print a nice banner for the CLI."""
    if args.json:
        return
    print("=" * 60)
    print("📐 Generalized SPSA Gradient Estimation Toolkit")
    print("=" * 60)
    print()


def emit(args, payload: Dict[str, Any], human: Callable[[], None]):
    """Print either the single JSON document or the human-readable report."""
    if args.json:
        print(json.dumps(payload, default=_to_builtin))
    else:
        human()


def emit_error(error: Exception):
    payload = {'schema_version': SCHEMA_VERSION, 'status': 'error'}
    if isinstance(error, GspgsError):
        payload.update(error.to_dict())
    else:
        payload.update({'error': type(error).__name__, 'message': str(error)})
    print(json.dumps(payload), file=sys.stderr)


def _to_builtin(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def records(frame) -> List[Dict[str, Any]]:
    """DataFrame rows with NaN mapped to None so the JSON stays strict."""
    return frame.astype(object).where(frame.notna(), None).to_dict(orient='records')


def parse_vector(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(x) for x in text.replace(' ', '').split(',') if x]
    except ValueError:
        raise ConfigurationError(f"Cannot parse vector {text!r}; expected comma-separated numbers")


def parse_list(text: str, cast=str) -> list:
    try:
        return [cast(x.strip()) for x in text.split(',') if x.strip()]
    except ValueError:
        raise ConfigurationError(f"Cannot parse list {text!r}")


def count(text: str) -> int:
    """Positive integer that also accepts 1e6 notation."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if not value.is_integer() or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


def experiment_from_args(args, **overrides) -> ExperimentConfig:
    """ExperimentConfig from parsed flags; unset flags fall back to model defaults."""
    values = {
        'objective': args.objective,
        'dim': args.dim,
        'sigma': args.sigma,
        'method': args.method,
        'k': args.k,
        'scheme': args.scheme,
        'eta': args.eta,
        'epsilon': args.epsilon,
        'base_seed': args.seed,
        'theta0': parse_vector(getattr(args, 'theta', None)),
        'theta0_fill': getattr(args, 'theta0_fill', None),
    }
    for name in ('schedule_mode', 'a0', 'A', 'gamma_a', 'delta0', 'gamma_d', 'a', 'delta', 'm', 'L',
                 'budget', 'divergence_guard'):
        values[name] = getattr(args, name, None)
    values['record_trace'] = getattr(args, 'trace', False)
    values['random_output'] = getattr(args, 'random_output', False)
    values['output_dir'] = getattr(args, 'out', None)
    values.update(overrides)
    return ExperimentConfig.build(**values)


def repository_for(args) -> Optional[ResultRepository]:
    return ResultRepository(args.out) if args.out else None


async def identities_command(args) -> int:
    """Check the coefficient identities in exact arithmetic."""
    print_banner(args)
    report = identity_check(args.kmax)
    if repository_for(args):
        repository_for(args).save_identities(report)

    def human():
        print(f"🔢 Coefficient identities up to k={args.kmax}:")
        print("-" * 40)
        for name, passed in report.to_summary()['identities'].items():
            print(f"   {'✅' if passed else '❌'} {name}")
        for failure in report.failures():
            print(f"   📝 {failure}")
        print(f"\n{'✅ All identities hold' if report.all_passed else '❌ Some identities failed'}")

    emit(args, report.to_summary(), human)
    return EXIT_OK if report.all_passed else EXIT_FAILURE


async def coefficients_command(args) -> int:
    """Print the one-sided and/or balanced coefficient tables."""
    print_banner(args)
    kinds = ['onesided', 'balanced'] if args.kind == 'both' else [args.kind]
    tables = {kind: coefficient_table(kind, args.kmax) for kind in kinds}
    repository = repository_for(args)
    if repository:
        for kind, frame in tables.items():
            repository.save_coefficients(frame, kind)

    def human():
        for kind, frame in tables.items():
            print(f"\n📋 {kind} coefficients (k ≤ {args.kmax}):")
            print("-" * 40)
            print(frame.to_string(index=False))

    payload = {'schema_version': SCHEMA_VERSION,
               'tables': {kind: frame.to_dict(orient='records') for kind, frame in tables.items()}}
    emit(args, payload, human)
    return EXIT_OK


async def estimate_command(args) -> int:
    """Compute one gradient estimate."""
    print_banner(args)
    config = experiment_from_args(args)
    objective = make_objective(config.objective, config.dim, config.sigma)
    theta = config.initial_theta(objective.default_theta0())
    estimator = config.estimator_config(args.delta)
    estimate = estimate_gradient(objective, theta, estimator, RngStream(config.base_seed))
    true_gradient = objective.true_gradient(theta)

    payload = {
        'schema_version': SCHEMA_VERSION,
        'estimator': estimator.describe(),
        'objective': objective.describe(),
        'seed': config.base_seed,
        'theta': theta.tolist(),
        'gradient': estimate.gradient.tolist(),
        'measurements': estimate.measurements,
        'true_gradient': true_gradient.tolist(),
    }

    def human():
        print(f"🧭 Estimator: {estimator.describe()}")
        print(f"🎯 Objective: {objective.describe()}")
        print(f"Theta: {np.array2string(theta, precision=6)}")
        print(f"\n📊 Gradient estimate: {np.array2string(estimate.gradient, precision=6)}")
        print(f"True gradient:       {np.array2string(true_gradient, precision=6)}")
        print(f"Measurements: {estimate.measurements}")

    emit(args, payload, human)
    return EXIT_OK


async def optimize_command(args) -> int:
    """Run the stochastic gradient recursion once."""
    print_banner(args)
    config = experiment_from_args(args, replications=1)
    result = execute_run(config, config.base_seed)
    provenance = config.provenance()
    payload = result.to_dict()
    payload['provenance'] = provenance
    repository = repository_for(args)
    if repository:
        repository.save_run(result, provenance)

    def human():
        print(f"🚀 {config.method} k={config.k} on {config.objective} d={config.dim}, schedule {provenance['schedule']}")
        print("\n📊 Run Results:")
        print("-" * 40)
        print(f"Iterations: {result.iterations}")
        print(f"Measurements: {result.measurements_used}/{result.budget}")
        print(f"Parameter error: {result.parameter_error}")
        if result.random_index is not None:
            print(f"Random output index R: {result.random_index}")
            print(f"Mean |grad F|^2 along the run: {result.mean_squared_gradient}")
            print(f"|grad F(theta0)|^2: {result.initial_squared_gradient}")
        if repository:
            print(f"\n💾 Results saved to {args.out}")

    emit(args, payload, human)
    return EXIT_OK


async def experiment_command(args) -> int:
    """Run seeded replications of one cell."""
    print_banner(args)
    config = experiment_from_args(args, replications=args.reps)
    orchestrator = ExperimentOrchestrator(OrchestratorConfig(
        max_concurrent=args.jobs,
        divergence_guard=config.divergence_guard,
        record_trace=config.record_trace,
        output_dir=args.out,
        progress_log=args.progress_log,
        verbose=not args.json,
    ))
    aggregate = await orchestrator.run_experiment(config)
    summary = aggregate.to_summary()

    def human():
        if aggregate.excluded_count:
            print(f"   📝 Failures:")
            for failure in summary['failures'][:3]:
                print(f"      - rep {failure['replication']}: {failure['message'][:60]}")
        if args.out:
            print(f"\n💾 Results saved to {args.out}")

    emit(args, summary, human)
    return EXIT_OK


async def table_command(args) -> int:
    """Run a published table grid."""
    print_banner(args)
    orchestrator = ExperimentOrchestrator(OrchestratorConfig(
        max_concurrent=args.jobs,
        output_dir=args.out,
        progress_log=args.progress_log,
        verbose=False,
    ))
    dims = parse_list(args.dims, int) if args.dims else None
    table = await orchestrator.run_table(args.table_id, scale=args.scale, sigma=args.sigma,
                                         replications=args.reps, base_seed=args.seed, dims=dims)
    trend = table.trend()
    payload = {
        'schema_version': SCHEMA_VERSION,
        'table_id': table.table_id,
        'method': table.method,
        'scale': table.scale,
        'sigma': table.sigma,
        'trend': trend,
        'cells': records(cell_frame(table)),
        'wall_clock': table.wall_clock,
    }

    def human():
        print(format_table(table))
        print("\n📈 Trend (largest k below smallest k):")
        for row, ok in trend.items():
            print(f"   {'✅' if ok else '❌'} {row}")
        print(f"\n⏱️  Processing Time: {table.wall_clock:.2f} seconds")
        if args.out:
            print(f"💾 Results saved to {args.out}")

    emit(args, payload, human)
    return EXIT_OK


def _print_sweep(report, label: str):
    print(f"\n📉 {label}:")
    print("-" * 40)
    for row in report.rows():
        print(f"   delta={row['delta']:<10g} value={row['value']:.6e}")
    if report.is_exact:
        print("Verdict: exact (bias vanishes)")
    else:
        print(f"Fitted slope: {report.fitted_slope:.3f}  (intercept {report.intercept:.3f}, "
              f"residual {report.fit_residual:.2e})")
    if report.expected_order is not None:
        print(f"Expected order: {report.expected_order}")


async def bias_sweep_command(args) -> int:
    """Bias norm over a delta grid on the minimal-degree test function."""
    print_banner(args)
    config = experiment_from_args(args)
    estimator = config.estimator_config()
    test_fn = order_test_objective(config.dim, estimator)
    theta = np.array(config.theta0) if config.theta0 is not None else np.zeros(config.dim)
    report = bias_order_sweep(test_fn, theta, estimator, parse_list(args.deltas, float),
                              mc_samples=args.mc_samples, seed=config.base_seed)
    if repository_for(args):
        repository_for(args).save_sweep(report, 'bias_sweep')
    payload = {**report.to_summary(), 'rows': report.rows()}
    emit(args, payload, lambda: _print_sweep(report, f"Bias of {estimator.describe()} on {test_fn.describe()}"))
    return EXIT_OK


async def variance_sweep_command(args) -> int:
    """Estimator variance over a delta grid at the optimum."""
    print_banner(args)
    config = experiment_from_args(args)
    objective = make_objective(config.objective, config.dim, config.sigma)
    theta = np.array(config.theta0) if config.theta0 is not None else objective.optimum()
    estimator = config.estimator_config()
    report = variance_scaling_sweep(objective, theta, estimator, parse_list(args.deltas, float),
                                    mc_samples=args.mc_samples, seed=config.base_seed)
    if repository_for(args):
        repository_for(args).save_sweep(report, 'variance_sweep')
    payload = {**report.to_summary(), 'rows': report.rows()}
    emit(args, payload, lambda: _print_sweep(report, f"Variance of {estimator.describe()} on {objective.describe()}"))
    return EXIT_OK


async def moments_command(args) -> int:
    """Monte-Carlo check of E[V U^T] = I and E[V] = 0."""
    print_banner(args)
    schemes = [PerturbationScheme.parse(text) for text in parse_list(args.schemes)]
    dims = parse_list(args.dims, int)
    root = RngStream(args.seed)
    reports = []
    for i, (scheme, d) in enumerate((s, d) for s in schemes for d in dims):
        reports.append(moment_check(scheme, d, root.spawn(i), samples=args.samples))
    if repository_for(args):
        repository_for(args).save_moments(reports)

    def human():
        print(f"🎲 Moment checks ({args.samples} samples each):")
        print("-" * 40)
        for report in reports:
            extra = f", ±1 fraction {report.plus_fraction:.4f}" if report.plus_fraction is not None else ""
            print(f"   {'✅' if report.passed else '❌'} {report.scheme:<20} d={report.dim:<3} "
                  f"max |z| {report.max_z:.2f} (threshold {report.z_threshold:.2f}){extra}")

    passed = all(r.passed for r in reports)
    emit(args, {'schema_version': SCHEMA_VERSION, 'all_passed': passed,
                'checks': [r.to_summary() for r in reports]}, human)
    return EXIT_OK if passed else EXIT_FAILURE


class ExperimentArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors go through the JSON error path instead of exiting."""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def build_parser() -> Tuple[argparse.ArgumentParser, Dict[str, argparse.ArgumentParser]]:
    parser = ExperimentArgumentParser(
        description="Generalized SPSA gradient estimation toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check coefficient identities
  python run_experiments.py identities --kmax 8

  # One gradient estimate
  python run_experiments.py estimate --method gspsa --k 2 --objective quadratic --dim 2 --sigma 0 --delta 0.1 --seed 7

  # One optimizer run, JSON output
  python run_experiments.py optimize --method bgspsa --k 2 --objective rastrigin --dim 5 --sigma 0.001 --budget 200000 --seed 1 --json

  # 20 replications of a table cell on 4 workers
  python run_experiments.py experiment --method gspsa --k 4 --objective rastrigin --dim 10 --reps 20 --jobs 4

  # Table grid at a tenth of the budget
  python run_experiments.py table gspsa-rastrigin --scale 0.1

  # Bias order and variance sweeps
  python run_experiments.py bias-sweep --method gspsa --k 2 --deltas 0.2,0.1,0.05,0.025
  python run_experiments.py variance-sweep --method bgspsa --k 2
        """
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', type=str, default=None, help='Directory for CSV/JSON outputs')
    common.add_argument('--json', action='store_true', help='Print a single JSON document instead of the report')
    common.add_argument('--verbose', action='store_true', help='Debug logging')
    common.add_argument('--config', type=str, help='Flat key=value file of flag defaults')

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument('--objective', choices=OBJECTIVES, help='Objective (default: rastrigin)')
    problem.add_argument('--dim', type=int, help='Problem dimension (default: 10)')
    problem.add_argument('--sigma', type=float, help=f'Noise level (default: {DEFAULT_SIGMA})')
    problem.add_argument('--method', choices=METHODS, help='Estimator method (default: gspsa)')
    problem.add_argument('--k', '--k1', '--k2', dest='k', type=int, help='Order k1 (k2 for bgspsa)')
    problem.add_argument('--scheme', type=str,
                         help='Perturbation family override: bernoulli, gaussian, sphere, uniform[:eta], asym-bernoulli[:eps]')
    problem.add_argument('--eta', type=float, help='Uniform half-width (default: 1)')
    problem.add_argument('--epsilon', type=float, help='Asymmetric Bernoulli skew (default: 0.1)')
    problem.add_argument('--seed', type=int, default=BASE_SEED, help=f'Base seed (default: {BASE_SEED})')
    problem.add_argument('--theta', type=str, help='Initial point, comma-separated')
    problem.add_argument('--theta0-fill', type=float, help='Constant initial point')

    schedule = argparse.ArgumentParser(add_help=False)
    schedule.add_argument('--schedule-mode', choices=['decaying', 'constant', 'theorem2'], help='Schedule family')
    schedule.add_argument('--a0', type=float, help='Step size numerator')
    schedule.add_argument('--A', type=float, help='Step size offset')
    schedule.add_argument('--gamma-a', type=float, help='Step size exponent')
    schedule.add_argument('--delta0', type=float, help='Sensitivity numerator')
    schedule.add_argument('--gamma-d', type=float, help='Sensitivity exponent')
    schedule.add_argument('--a', type=float, help='Constant step size')
    schedule.add_argument('--delta', type=float, help='Constant sensitivity')
    schedule.add_argument('--m', type=count, help='Iterations for the theorem2 schedule')
    schedule.add_argument('--L', type=float, help='Smoothness constant for the theorem2 schedule')
    schedule.add_argument('--budget', type=count, help='Function measurements per run (default: 200000)')
    schedule.add_argument('--divergence-guard', type=float, help='Abort when max |theta_i| exceeds this')
    schedule.add_argument('--trace', action='store_true', help='Record the per-iteration trace')
    schedule.add_argument('--random-output', action='store_true', help='Also report theta(R), R uniform')

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument('--reps', type=count, default=DEFAULT_REPLICATIONS,
                       help=f'Replications (default: {DEFAULT_REPLICATIONS})')
    batch.add_argument('--jobs', type=count, default=MAX_CONCURRENT_JOBS, help='Concurrency cap')
    batch.add_argument('--progress-log', type=str, help='File for periodic progress reports')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    identities = subparsers.add_parser('identities', parents=[common], help='Check coefficient identities')
    identities.add_argument('--kmax', type=int, default=8, help='Largest order (default: 8)')

    coefficients = subparsers.add_parser('coefficients', parents=[common], help='Print coefficient tables')
    coefficients.add_argument('--kind', choices=['onesided', 'balanced', 'both'], default='both')
    coefficients.add_argument('--kmax', type=int, default=4, help='Largest order (default: 4)')

    estimate = subparsers.add_parser('estimate', parents=[common, problem], help='One gradient estimate')
    estimate.add_argument('--delta', type=float, default=0.1, help='Sensitivity (default: 0.1)')

    subparsers.add_parser('optimize', parents=[common, problem, schedule], help='One optimizer run')

    experiment = subparsers.add_parser('experiment', parents=[common, problem, schedule, batch],
                                       help='Seeded replications of one cell')
    experiment.set_defaults(out=OUTPUT_DIR)

    table = subparsers.add_parser('table', parents=[common, batch], help='Run a published table grid')
    table.add_argument('table_id', choices=sorted(TABLES), help='Table id')
    table.add_argument('--scale', type=float, default=1.0, help='Budget multiplier in (0, 1]')
    table.add_argument('--sigma', type=float, default=DEFAULT_SIGMA, help=f'Noise level (default: {DEFAULT_SIGMA})')
    table.add_argument('--seed', type=int, default=BASE_SEED, help='Base seed')
    table.add_argument('--dims', type=str, help='Subset of dimensions, comma-separated')
    table.set_defaults(out=OUTPUT_DIR)

    bias = subparsers.add_parser('bias-sweep', parents=[common, problem], help='Bias order sweep')
    bias.add_argument('--deltas', type=str, default='0.2,0.1,0.05,0.025', help='Strictly decreasing grid')
    bias.add_argument('--mc-samples', type=count, default=10 ** 6, help='Monte-Carlo samples per delta')
    bias.set_defaults(objective='quadratic', dim=3, sigma=0.0)

    variance = subparsers.add_parser('variance-sweep', parents=[common, problem], help='Variance scaling sweep')
    variance.add_argument('--deltas', type=str, default='0.2,0.1,0.05,0.025', help='Strictly decreasing grid')
    variance.add_argument('--mc-samples', type=count, default=10 ** 5, help='Samples per delta')
    variance.set_defaults(objective='quadratic', dim=5, sigma=0.1)

    moments = subparsers.add_parser('moments', parents=[common], help='Perturbation moment checks')
    moments.add_argument('--schemes', type=str, default=DEFAULT_MOMENT_SCHEMES, help='Comma-separated schemes')
    moments.add_argument('--dims', type=str, default='2,10', help='Comma-separated dimensions')
    moments.add_argument('--samples', type=count, default=10 ** 6, help='Samples per check')
    moments.add_argument('--seed', type=int, default=BASE_SEED, help='Base seed')

    return parser, subparsers.choices


def apply_config_file(subcommands: Dict[str, argparse.ArgumentParser], argv: List[str]):
    """
    Load `--config FILE` (flat key=value) as subcommand defaults.

    Explicit flags still win because argparse only uses defaults for absent flags.
    """
    pre = ExperimentArgumentParser(add_help=False)
    pre.add_argument('--config')
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {known.config}")

    values = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().lstrip('-').replace('-', '_')
        values['k' if name in ('k1', 'k2') else name] = value

    unknown = set(values)
    for subparser in subcommands.values():
        actions = {action.dest: action for action in subparser._actions}
        defaults = {}
        for name, value in values.items():
            if name not in actions or name in ('config', 'help'):
                continue
            unknown.discard(name)
            if actions[name].nargs == 0:
                value = str(value).strip().lower() in ('1', 'true', 'yes', 'on')
            defaults[name] = value
        subparser.set_defaults(**defaults)
    if unknown:
        raise ConfigurationError(f"Unknown keys in {known.config}: {sorted(unknown)}")


COMMANDS = {
    'identities': identities_command,
    'coefficients': coefficients_command,
    'estimate': estimate_command,
    'optimize': optimize_command,
    'experiment': experiment_command,
    'table': table_command,
    'bias-sweep': bias_sweep_command,
    'variance-sweep': variance_sweep_command,
    'moments': moments_command,
}


def main(argv: Optional[List[str]] = None):
    """Main CLI entry point."""
    argv = sys.argv[1:] if argv is None else argv
    parser, subcommands = build_parser()

    try:
        apply_config_file(subcommands, argv)
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else LOG_LEVEL,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        )
        logging.getLogger(__name__).debug("Runtime configuration: %s", json.dumps(get_runtime_config()))
        code = asyncio.run(COMMANDS[args.command](args))
    except KeyboardInterrupt:
        print("\n\n⚠️  Operation cancelled by user.", file=sys.stderr)
        sys.exit(EXIT_INTERRUPTED)
    except ConfigurationError as e:
        emit_error(e)
        sys.exit(EXIT_USAGE)
    except GspgsError as e:
        emit_error(e)
        sys.exit(EXIT_FAILURE)
    except Exception as e:
        emit_error(e)
        sys.exit(EXIT_FAILURE)
    sys.exit(code)


if __name__ == "__main__":
    main()
