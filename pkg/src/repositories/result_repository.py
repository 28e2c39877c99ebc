"""
File-backed repository for experiment results.

Every CSV row carries the provenance columns of its cell (method, k, dim,
sigma, schedule constants, budget, seed) and a schema_version column.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from src.models.experiment import SCHEMA_VERSION, AggregateResult, TableResult
from src.models.run_result import RunResult
from src.models.sweep_report import IdentityReport, MomentReport, SweepReport

logger = logging.getLogger(__name__)

REPLICATION_COLUMNS = [
    'schema_version', 'objective', 'method', 'k', 'dim', 'sigma', 'scheme', 'schedule',
    'a0', 'A', 'gamma_a', 'delta0', 'gamma_d', 'budget',
    'replication', 'seed', 'parameter_error', 'iterations', 'measurements_used', 'failed', 'error_message',
]

CELL_COLUMNS = [
    'schema_version', 'table_id', 'objective', 'method', 'k', 'dim', 'sigma', 'scheme', 'schedule',
    'a0', 'A', 'gamma_a', 'delta0', 'gamma_d', 'budget', 'base_seed',
    'replications', 'successful', 'excluded', 'mean_error', 'standard_error', 'wall_clock', 'error',
]


def replication_frame(aggregate: AggregateResult) -> pd.DataFrame:
    provenance = aggregate.config.provenance()
    rows = []
    for outcome in aggregate.outcomes:
        rows.append({
            'schema_version': SCHEMA_VERSION,
            **provenance,
            'replication': outcome.replication,
            'seed': outcome.seed,
            'parameter_error': outcome.parameter_error,
            'iterations': outcome.iterations,
            'measurements_used': outcome.measurements_used,
            'failed': outcome.failed,
            'error_message': outcome.error_message,
        })
    return pd.DataFrame(rows, columns=REPLICATION_COLUMNS)


def cell_frame(table: TableResult) -> pd.DataFrame:
    rows = []
    for cell in table.cells:
        row = {
            'schema_version': SCHEMA_VERSION,
            'table_id': table.table_id,
            'objective': cell.objective,
            'method': table.method,
            'k': cell.k,
            'dim': cell.dim,
            'sigma': table.sigma,
            'error': cell.error,
        }
        aggregate = cell.aggregate
        if aggregate is not None:
            row.update(aggregate.config.provenance())
            row.update({
                'base_seed': aggregate.config.base_seed,
                'replications': len(aggregate.outcomes),
                'successful': len(aggregate.errors),
                'excluded': aggregate.excluded_count,
                'mean_error': aggregate.mean,
                'standard_error': aggregate.standard_error,
                'wall_clock': aggregate.wall_clock,
            })
        rows.append(row)
    return pd.DataFrame(rows, columns=CELL_COLUMNS)


def _format_cell(mean: float, standard_error: float) -> str:
    if mean is None or (isinstance(mean, float) and math.isnan(mean)):
        return "failed"
    if standard_error is None or math.isnan(standard_error):
        return f"{mean:.3e}"
    return f"{mean:.3e} ± {standard_error:.1e}"


def format_table(table: TableResult) -> str:
    """Aligned plain-text grid: one row per (objective, dim), one column per k."""
    frame = cell_frame(table)
    if frame.empty:
        return f"{table.table_id}: no cells"
    frame['cell'] = [_format_cell(m, s) for m, s in zip(frame['mean_error'], frame['standard_error'])]
    grid = frame.pivot_table(index=['objective', 'dim'], columns='k', values='cell', aggfunc='first')
    grid.columns = [f"k={k}" for k in grid.columns]
    header = (f"{table.table_id} ({table.method}), sigma={table.sigma:g}, "
              f"budget scale={table.scale:g}")
    return header + "\n" + grid.to_string()


def _json_default(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class ResultRepository:
    """Writes experiment outputs under one directory."""

    def __init__(self, output_dir: str):
        self.output_dir = Path(output_dir)

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self._path(name)
        with open(path, 'w') as f:
            json.dump(payload, f, indent=2, default=_json_default)
        return path

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._path(name)
        frame.to_csv(path, index=False)
        logger.debug("Wrote %d rows to %s", len(frame), path)
        return path

    def save_experiment(self, aggregate: AggregateResult) -> List[Path]:
        return [
            self.write_frame('replications.csv', replication_frame(aggregate)),
            self.write_json('summary.json', aggregate.to_summary()),
        ]

    def save_table(self, table: TableResult) -> List[Path]:
        frames = [replication_frame(c.aggregate) for c in table.cells if c.aggregate is not None]
        replications = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=REPLICATION_COLUMNS)
        summary = {
            'schema_version': SCHEMA_VERSION,
            'table_id': table.table_id,
            'method': table.method,
            'scale': table.scale,
            'sigma': table.sigma,
            'cells': len(table.cells),
            'failed_cells': sum(1 for c in table.cells if c.error is not None),
            'trend': table.trend(),
            'wall_clock': table.wall_clock,
        }
        text = format_table(table)
        path = self._path('table.txt')
        path.write_text(text + "\n")
        return [
            self.write_frame('cells.csv', cell_frame(table)),
            self.write_frame('replications.csv', replications),
            self.write_json('summary.json', summary),
            path,
        ]

    def save_run(self, result: RunResult, provenance: Optional[Dict[str, Any]] = None) -> List[Path]:
        """JSON payload of one optimizer run plus its trace CSV when recorded."""
        payload = result.to_dict()
        if provenance:
            payload['provenance'] = provenance
        paths = [self.write_json('run.json', payload)]
        if result.trace is not None:
            rows = [{
                'schema_version': SCHEMA_VERSION,
                **(provenance or {}),
                'seed': result.seed,
                'n': record.n,
                'step_size': record.step_size,
                'sensitivity': record.sensitivity,
                'gradient_norm': record.gradient_norm,
                **{f"theta_{i}": value for i, value in enumerate(record.theta)},
            } for record in result.trace]
            paths.append(self.write_frame('trace.csv', pd.DataFrame(rows)))
        return paths

    def save_sweep(self, report: SweepReport, name: str) -> List[Path]:
        frame = pd.DataFrame(report.rows())
        frame.insert(0, 'schema_version', SCHEMA_VERSION)
        for key, value in report.metadata.items():
            frame[key] = value
        return [
            self.write_frame(f'{name}.csv', frame),
            self.write_json(f'{name}.json', report.to_summary()),
        ]

    def save_coefficients(self, frame: pd.DataFrame, kind: str) -> Path:
        return self.write_frame(f'coefficients_{kind}.csv', frame)

    def save_identities(self, report: IdentityReport) -> Path:
        return self.write_json('identities.json', report.to_summary())

    def save_moments(self, reports: List[MomentReport]) -> List[Path]:
        frame = pd.DataFrame([r.to_summary() for r in reports])
        return [
            self.write_frame('moments.csv', frame),
            self.write_json('moments.json', {
                'schema_version': SCHEMA_VERSION,
                'all_passed': all(r.passed for r in reports),
                'checks': [r.to_summary() for r in reports],
            }),
        ]
