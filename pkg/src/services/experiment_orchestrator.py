"""
Experiment Orchestrator Service.

Runs seeded replications of experiment cells and full table grids with
bounded concurrency, aggregates parameter errors and hands the results to
the result repository.
"""

import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from src.config import DIVERGENCE_GUARD, MAX_CONCURRENT_JOBS, OUTPUT_DIR
from src.config.hyperparameters import DEFAULT_BUDGET, DEFAULT_REPLICATIONS, DEFAULT_SIGMA, get_table_spec
from src.models.errors import ConfigurationError, GspgsError
from src.models.experiment import AggregateResult, ExperimentConfig, ReplicationOutcome, TableCell, TableResult
from src.repositories.result_repository import ResultRepository
from src.tasks.replication.run_replication import (
    format_progress,
    progress_reporter,
    replication_seed,
    run_replication,
    setup_progress_logger,
)

logger = logging.getLogger(__name__)


@dataclass
class OrchestratorConfig:
    """Configuration for experiment orchestration."""
    max_concurrent: int = MAX_CONCURRENT_JOBS
    divergence_guard: float = DIVERGENCE_GUARD
    record_trace: bool = False
    output_dir: Optional[str] = OUTPUT_DIR
    progress_log: Optional[str] = None
    # print per-cell summaries to stdout
    verbose: bool = True


class ExperimentOrchestrator:
    """
    Main orchestrator for experiment runs.

    This class handles:
    1. Fanning replications out under a concurrency cap
    2. Aggregating per-replication errors, excluding failed runs
    3. Running table grids cell by cell, isolating per-cell failures
    4. Writing CSV and JSON outputs
    """

    def __init__(self, config: Optional[OrchestratorConfig] = None):
        self.config = config or OrchestratorConfig()
        if self.config.max_concurrent < 1:
            raise ConfigurationError(f"jobs must be at least 1, got {self.config.max_concurrent}")
        self.repository = ResultRepository(self.config.output_dir) if self.config.output_dir else None
        self.progress = setup_progress_logger(self.config.progress_log) if self.config.progress_log else None
        # worker pool shared by the cells of a table run; None outside run_table
        self.executor: Optional[ProcessPoolExecutor] = None

    async def run_experiment(self, experiment: ExperimentConfig, write: bool = True) -> AggregateResult:
        """
        Execute `replications` independent runs with seeds base_seed + r.

        Args:
            experiment: validated cell configuration
            write: write replications.csv and summary.json when an output dir is set

        Returns:
            AggregateResult sorted by replication index
        """
        start = time.time()
        payload = experiment.model_dump()
        total = experiment.replications
        results = {
            'total': total,
            'successful': 0,
            'failed': 0,
            'errors': [],
        }
        outcomes = []
        processed_count = [0]

        semaphore = asyncio.Semaphore(self.config.max_concurrent)
        loop = asyncio.get_running_loop()
        executor = self.executor
        owned = None
        if executor is None and self.config.max_concurrent > 1:
            executor = owned = ProcessPoolExecutor(max_workers=self.config.max_concurrent)

        async def process_single_replication(r: int):
            async with semaphore:
                try:
                    if executor is None:
                        outcome = run_replication(payload, r)
                    else:
                        outcome = await loop.run_in_executor(executor, run_replication, payload, r)
                    outcomes.append(outcome)
                    if outcome.failed:
                        results['failed'] += 1
                        results['errors'].append({'replication': r, 'error': outcome.error_message})
                    else:
                        results['successful'] += 1
                except Exception as e:
                    message = f"{type(e).__name__}: {e}"
                    outcomes.append(ReplicationOutcome(
                        replication=r,
                        seed=replication_seed(experiment.base_seed, r),
                        parameter_error=None,
                        iterations=0,
                        measurements_used=0,
                        failed=True,
                        error_message=message,
                    ))
                    results['failed'] += 1
                    results['errors'].append({'replication': r, 'error': message})
                    logger.error("Replication %d raised: %s", r, message)
                finally:
                    processed_count[0] += 1
                    # yield so the progress reporter can run between inline replications
                    await asyncio.sleep(0)

        reporter = None
        if self.progress is not None:
            reporter = asyncio.create_task(progress_reporter(processed_count, total, start, self.progress))
        try:
            tasks = [process_single_replication(r) for r in range(total)]
            await asyncio.gather(*tasks, return_exceptions=True)
        finally:
            if reporter is not None:
                reporter.cancel()
            if owned is not None:
                owned.shutdown()

        outcomes.sort(key=lambda o: o.replication)
        aggregate = AggregateResult(config=experiment, outcomes=outcomes, wall_clock=time.time() - start)
        if self.progress is not None:
            self.progress.info(format_progress(processed_count[0], total, start))

        if write and self.repository is not None:
            self.repository.save_experiment(aggregate)
        self._log_experiment_summary(aggregate, results)
        return aggregate

    async def run_table(self, table_id: str, scale: float = 1.0, sigma: float = DEFAULT_SIGMA,
                        replications: int = DEFAULT_REPLICATIONS, base_seed: int = 0,
                        dims: Optional[List[int]] = None) -> TableResult:
        """
        Run the full grid of a published table with its hyperparameters.

        A failing cell is recorded with its error and the remaining cells still run.
        """
        spec = get_table_spec(table_id)
        if not (0 < scale <= 1):
            raise ConfigurationError(f"scale must lie in (0, 1], got {scale}")
        budget = max(1, int(round(scale * DEFAULT_BUDGET)))
        start = time.time()
        table = TableResult(table_id=table_id, method=spec.method, scale=scale, sigma=sigma)

        if self.config.max_concurrent > 1:
            self.executor = ProcessPoolExecutor(max_workers=self.config.max_concurrent)
        try:
            for objective in spec.objectives:
                for dim in dims or spec.dims:
                    for k in spec.orders:
                        table.cells.append(await self._run_cell(objective, dim, k, sigma, spec.method,
                                                                budget, replications, base_seed))
        finally:
            if self.executor is not None:
                self.executor.shutdown()
                self.executor = None

        table.wall_clock = time.time() - start
        if self.repository is not None:
            self.repository.save_table(table)
        return table

    async def _run_cell(self, objective: str, dim: int, k: int, sigma: float, method: str,
                        budget: int, replications: int, base_seed: int) -> TableCell:
        cell = TableCell(objective=objective, dim=dim, k=k)
        try:
            experiment = ExperimentConfig.build(
                objective=objective, dim=dim, sigma=sigma, method=method, k=k,
                budget=budget, replications=replications, base_seed=base_seed,
                divergence_guard=self.config.divergence_guard,
            )
            cell.aggregate = await self.run_experiment(experiment, write=False)
        except GspgsError as e:
            cell.error = f"{type(e).__name__}: {e}"
            logger.warning("Cell %s d=%d k=%d failed: %s", objective, dim, k, e)
            if self.config.verbose:
                print(f"❌ Cell {objective} d={dim} k={k} failed: {e}")
        return cell

    def _log_experiment_summary(self, aggregate: AggregateResult, results: Dict[str, Any]):
        """Log experiment summary for monitoring."""
        config = aggregate.config
        logger.info("%s %s k=%d d=%d: %d/%d replications succeeded, mean error %.4g",
                    config.objective, config.method, config.k, config.dim,
                    results['successful'], results['total'], aggregate.mean)
        if not self.config.verbose:
            return
        print(f"\n🎉 Experiment Summary ({config.method} k={config.k}, {config.objective} d={config.dim})")
        print(f"📊 Replications: {results['total']}")
        print(f"   ✅ Successful: {results['successful']}")
        print(f"   ❌ Failed: {results['failed']}")
        print(f"📉 Mean parameter error: {aggregate.mean:.4g} ± {aggregate.standard_error:.2g}")
        print(f"⏱️  Processing Time: {aggregate.wall_clock:.2f} seconds")


async def run_experiment(experiment: ExperimentConfig, jobs: int = 1,
                         output_dir: Optional[str] = None) -> AggregateResult:
    """
    Convenience function to run one experiment cell.

    Args:
        experiment: validated cell configuration
        jobs: concurrency cap
        output_dir: where to write CSV/JSON; nothing is written when None
    """
    orchestrator = ExperimentOrchestrator(OrchestratorConfig(
        max_concurrent=jobs, divergence_guard=experiment.divergence_guard, output_dir=output_dir,
    ))
    return await orchestrator.run_experiment(experiment)


async def run_table(table_id: str, scale: float = 1.0, sigma: float = DEFAULT_SIGMA,
                    replications: int = DEFAULT_REPLICATIONS, jobs: int = 1,
                    output_dir: Optional[str] = None, base_seed: int = 0) -> TableResult:
    """
    Convenience function to run a table grid.

    Args:
        table_id: gspsa-rastrigin, gspsa-quadratic, grdsa, gsf or bgspsa
        scale: budget multiplier in (0, 1]
    """
    orchestrator = ExperimentOrchestrator(OrchestratorConfig(
        max_concurrent=jobs, output_dir=output_dir, verbose=False,
    ))
    return await orchestrator.run_table(table_id, scale=scale, sigma=sigma,
                                        replications=replications, base_seed=base_seed)


if __name__ == "__main__":
    async def demo_experiment():
        print("🧪 Testing Experiment Orchestration")
        experiment = ExperimentConfig.build(objective='quadratic', dim=5, method='gspsa', k=2,
                                            budget=20_000, replications=4)
        aggregate = await run_experiment(experiment)
        print(f"Experiment result: {aggregate.to_summary()}")

    asyncio.run(demo_experiment())
