"""
Single seeded replication of an experiment cell.

`run_replication` takes a plain-dict payload so it can be shipped to a worker
process. The progress helpers write a periodic report to a log file.
"""

import asyncio
import logging
import time
from typing import Any, Dict, Optional

from src.config import PROGRESS_LOG
from src.models.errors import GspgsError
from src.models.experiment import ExperimentConfig, ReplicationOutcome
from src.models.run_result import RunResult
from src.services.objectives import make_objective
from src.services.optimizer import run_sgd

logger = logging.getLogger(__name__)

PROGRESS_INTERVAL = 30.0


def replication_seed(base_seed: int, replication: int) -> int:
    return base_seed + replication


def execute_run(config: ExperimentConfig, seed: int) -> RunResult:
    """Build objective, estimator and schedule from config and run one optimizer pass."""
    objective = make_objective(config.objective, config.dim, config.sigma)
    theta0 = config.initial_theta(objective.default_theta0())
    return run_sgd(
        objective,
        config.estimator_config(),
        config.schedule(),
        theta0,
        config.resolved_budget(),
        seed,
        divergence_guard=config.divergence_guard,
        record_trace=config.record_trace,
        random_output=config.random_output,
    )


def run_replication(payload: Dict[str, Any], replication: int) -> ReplicationOutcome:
    """
    Run replication r of the cell described by payload.

    Domain failures (divergence, non-finite measurements) are returned as a
    failed outcome rather than raised.
    """
    config = ExperimentConfig(**payload)
    seed = replication_seed(config.base_seed, replication)
    start = time.time()
    try:
        result = execute_run(config, seed)
    except GspgsError as e:
        logger.warning("Replication %d (seed %d) failed: %s", replication, seed, e)
        return ReplicationOutcome(
            replication=replication,
            seed=seed,
            parameter_error=None,
            iterations=getattr(e, 'iteration', None) or 0,
            measurements_used=0,
            failed=True,
            error_message=f"{type(e).__name__}: {e}",
            wall_clock=time.time() - start,
        )

    return ReplicationOutcome(
        replication=replication,
        seed=seed,
        parameter_error=result.parameter_error,
        iterations=result.iterations,
        measurements_used=result.measurements_used,
        wall_clock=time.time() - start,
    )


def setup_progress_logger(path: Optional[str] = None):
    """Setup a file logger for progress tracking."""
    progress = logging.getLogger('experiment_progress')
    progress.setLevel(logging.INFO)

    # Remove existing handlers
    for handler in progress.handlers[:]:
        progress.removeHandler(handler)

    file_handler = logging.FileHandler(path or PROGRESS_LOG)
    file_handler.setLevel(logging.INFO)
    file_handler.setFormatter(logging.Formatter('%(asctime)s - %(message)s'))
    progress.addHandler(file_handler)
    progress.propagate = False
    return progress


def format_progress(done: int, total: int, start_time: float) -> str:
    elapsed = time.time() - start_time
    rate = done / elapsed if elapsed > 0 else 0.0
    eta = (total - done) / rate if rate > 0 else 0.0
    percent = done / total * 100 if total else 100.0
    return f"📊 Progress Report: {done}/{total} ({percent:.1f}%) | Rate: {rate:.2f} runs/sec | ETA: {eta / 60:.1f} min"


async def progress_reporter(processed_count: list, total_count: int, start_time: float,
                            progress: logging.Logger, interval: float = PROGRESS_INTERVAL):
    """
    Periodically report progress statistics to the progress log.

    Args:
        processed_count: single-element list holding the completed count
        total_count: total number of replications
        start_time: batch start time
        progress: logger from setup_progress_logger
        interval: seconds between reports
    """
    while processed_count[0] < total_count:
        await asyncio.sleep(interval)
        progress.info(format_progress(processed_count[0], total_count, start_time))
