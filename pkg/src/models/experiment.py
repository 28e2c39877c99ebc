"""
Experiment request and result models.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config import BASE_SEED, DIVERGENCE_GUARD
from src.config.hyperparameters import (
    DEFAULT_BUDGET,
    DEFAULT_REPLICATIONS,
    DEFAULT_SIGMA,
    METHOD_SCHEMES,
    get_decaying_defaults,
)
from src.models.errors import ConfigurationError
from src.models.estimator_config import MAX_BALANCED_ORDER, MAX_ONE_SIDED_ORDER, EstimatorConfig
from src.models.perturbation import PerturbationKind, PerturbationScheme
from src.models.schedule import Schedule

SCHEMA_VERSION = 1


class ExperimentConfig(BaseModel):
    """One experiment cell: objective, method, order, schedule and replication plan."""
    model_config = ConfigDict(extra='forbid')

    objective: Literal['quadratic', 'rastrigin'] = Field('rastrigin', description="Objective id")
    dim: int = Field(10, ge=1, description="Problem dimension d")
    sigma: float = Field(DEFAULT_SIGMA, ge=0, description="Noise level")
    method: Literal['gspsa', 'gsf', 'grdsa', 'bgspsa', 'fdsa'] = Field('gspsa', description="Estimator method")
    k: int = Field(1, ge=1, description="k1 for one-sided methods, k2 for bgspsa")
    scheme: Optional[str] = Field(None, description="Override of the method's perturbation family")
    eta: float = Field(1.0, gt=0, description="Half-width of uniform perturbations")
    epsilon: float = Field(0.1, gt=0, description="Skew of asymmetric Bernoulli perturbations")

    schedule_mode: Literal['decaying', 'constant', 'theorem2'] = 'decaying'
    a0: Optional[float] = Field(None, gt=0)
    A: Optional[float] = Field(None, ge=0)
    gamma_a: Optional[float] = Field(None, ge=0)
    delta0: Optional[float] = Field(None, gt=0)
    gamma_d: Optional[float] = Field(None, ge=0)
    a: Optional[float] = Field(None, gt=0, description="Constant step size")
    delta: Optional[float] = Field(None, gt=0, description="Constant sensitivity")
    m: Optional[int] = Field(None, ge=1, description="Iteration count for the theorem2 schedule")
    L: Optional[float] = Field(None, gt=0, description="Smoothness constant for the theorem2 schedule")

    budget: Optional[int] = Field(None, ge=1, description="Function measurements per run")
    replications: int = Field(DEFAULT_REPLICATIONS, ge=1)
    base_seed: int = Field(BASE_SEED, ge=0, lt=2 ** 64)
    theta0: Optional[List[float]] = None
    theta0_fill: Optional[float] = None
    divergence_guard: float = Field(DIVERGENCE_GUARD, gt=0)
    record_trace: bool = False
    random_output: bool = False
    output_dir: Optional[str] = None

    @model_validator(mode='after')
    def validate_cell(self):
        if self.scheme is not None:
            if self.method == 'fdsa':
                raise ValueError("fdsa uses coordinate directions and takes no scheme")
            self.perturbation_scheme()
        upper = MAX_BALANCED_ORDER if self.method == 'bgspsa' else MAX_ONE_SIDED_ORDER
        if self.method != 'fdsa' and self.k > upper:
            raise ValueError(f"order k={self.k} exceeds {upper} for method {self.method}")
        if self.schedule_mode == 'constant' and (self.a is None or self.delta is None):
            raise ValueError("constant schedule needs both a and delta")
        if self.schedule_mode == 'theorem2' and self.m is None:
            raise ValueError("theorem2 schedule needs m")
        if self.theta0 is not None and len(self.theta0) != self.dim:
            raise ValueError(f"theta0 has length {len(self.theta0)}, expected {self.dim}")
        if self.resolved_budget() < self.measurements_per_iteration():
            raise ValueError(
                f"budget {self.resolved_budget()} is below the per-iteration cost {self.measurements_per_iteration()}"
            )
        return self

    @classmethod
    def build(cls, **values) -> 'ExperimentConfig':
        """Validate, converting pydantic errors into ConfigurationError."""
        try:
            return cls(**{key: value for key, value in values.items() if value is not None})
        except ValidationError as e:
            raise ConfigurationError(_format_validation_error(e)) from e

    def perturbation_scheme(self) -> PerturbationScheme:
        """Scheme override or the method's family; bare parametric names take eta/epsilon."""
        family = self.scheme if self.scheme is not None else (METHOD_SCHEMES[self.method] or 'bernoulli')
        name, _, param = family.strip().lower().partition(':')
        if not param and name == PerturbationKind.UNIFORM.value:
            return PerturbationScheme.uniform(self.eta)
        if not param and name == PerturbationKind.ASYMMETRIC_BERNOULLI.value:
            return PerturbationScheme.asymmetric_bernoulli(self.epsilon)
        return PerturbationScheme.parse(family)

    def estimator_config(self, delta: float = 0.1) -> EstimatorConfig:
        if self.method == 'fdsa':
            return EstimatorConfig.fdsa(delta)
        if self.method == 'bgspsa':
            return EstimatorConfig.balanced(self.k, self.perturbation_scheme(), delta)
        return EstimatorConfig.one_sided(self.k, self.perturbation_scheme(), delta)

    def measurements_per_iteration(self) -> int:
        if self.method == 'fdsa':
            return 2 * self.dim
        return 2 * self.k if self.method == 'bgspsa' else self.k + 1

    def smoothness_constant(self) -> float:
        if self.L is not None:
            return self.L
        if self.objective == 'quadratic':
            return (self.dim + 1.0) / self.dim
        return 2.0 + 40.0 * math.pi ** 2

    def resolved_budget(self) -> int:
        if self.budget is not None:
            return self.budget
        if self.schedule_mode == 'theorem2' and self.m is not None:
            return self.m * self.measurements_per_iteration()
        return DEFAULT_BUDGET

    def schedule(self) -> Schedule:
        if self.schedule_mode == 'constant':
            return Schedule.constant(self.a, self.delta)
        if self.schedule_mode == 'theorem2':
            # local import keeps the model layer free of service imports at load time
            from src.services.optimizer import theorem2_params
            return theorem2_params(self.m, self.smoothness_constant(), self.k)
        defaults = get_decaying_defaults(self.objective, self.method)
        return Schedule.decaying(
            a0=self.a0 if self.a0 is not None else defaults.a0,
            A=self.A if self.A is not None else defaults.A,
            delta0=self.delta0 if self.delta0 is not None else defaults.delta0,
            gamma_d=self.gamma_d if self.gamma_d is not None else defaults.gamma_d,
            gamma_a=self.gamma_a if self.gamma_a is not None else defaults.gamma_a,
        )

    def initial_theta(self, default: np.ndarray) -> np.ndarray:
        if self.theta0 is not None:
            return np.array(self.theta0, dtype=float)
        if self.theta0_fill is not None:
            return np.full(self.dim, float(self.theta0_fill))
        return default

    def provenance(self) -> Dict[str, Any]:
        """Columns repeated on every output row."""
        schedule = self.schedule()
        return {
            'objective': self.objective,
            'method': self.method,
            'k': self.k,
            'dim': self.dim,
            'sigma': self.sigma,
            'scheme': 'coordinate' if self.method == 'fdsa' else str(self.perturbation_scheme()),
            'schedule': schedule.describe(),
            'a0': schedule.a0,
            'A': schedule.A,
            'gamma_a': schedule.gamma_a,
            'delta0': schedule.delta0,
            'gamma_d': schedule.gamma_d,
            'budget': self.resolved_budget(),
        }


def _format_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = '.'.join(str(p) for p in item.get('loc', ())) or 'config'
        parts.append(f"{location}: {item.get('msg')}")
    return '; '.join(parts)


@dataclass
class ReplicationOutcome:
    replication: int
    seed: int
    parameter_error: Optional[float]
    iterations: int
    measurements_used: int
    failed: bool = False
    error_message: Optional[str] = None
    wall_clock: float = 0.0


@dataclass
class AggregateResult:
    """Replications of one experiment cell; statistics exclude failed runs."""
    config: ExperimentConfig
    outcomes: List[ReplicationOutcome]
    wall_clock: float = 0.0

    @property
    def errors(self) -> List[float]:
        return [o.parameter_error for o in self.outcomes if not o.failed and o.parameter_error is not None]

    @property
    def excluded_count(self) -> int:
        return sum(1 for o in self.outcomes if o.failed)

    @property
    def mean(self) -> float:
        errors = self.errors
        return float(np.mean(errors)) if errors else float('nan')

    @property
    def standard_error(self) -> float:
        errors = self.errors
        if len(errors) < 2:
            return float('nan')
        return float(np.std(errors, ddof=1) / np.sqrt(len(errors)))

    def to_summary(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'config': self.config.model_dump(),
            'provenance': self.config.provenance(),
            'replications': len(self.outcomes),
            'successful': len(self.errors),
            'excluded': self.excluded_count,
            'mean_error': None if math.isnan(self.mean) else self.mean,
            'standard_error': None if math.isnan(self.standard_error) else self.standard_error,
            'wall_clock': self.wall_clock,
            'failures': [
                {'replication': o.replication, 'seed': o.seed, 'message': o.error_message}
                for o in self.outcomes if o.failed
            ],
        }


@dataclass
class TableCell:
    objective: str
    dim: int
    k: int
    aggregate: Optional[AggregateResult] = None
    error: Optional[str] = None


@dataclass
class TableResult:
    table_id: str
    method: str
    scale: float
    sigma: float
    cells: List[TableCell] = field(default_factory=list)
    wall_clock: float = 0.0

    def cell_mean(self, objective: str, dim: int, k: int) -> float:
        for cell in self.cells:
            if (cell.objective, cell.dim, cell.k) == (objective, dim, k) and cell.aggregate is not None:
                return cell.aggregate.mean
        return float('nan')

    def trend(self) -> Dict[str, bool]:
        """Per (objective, dim) row: error at the largest k below error at the smallest k."""
        verdicts = {}
        rows = sorted({(c.objective, c.dim) for c in self.cells})
        for objective, dim in rows:
            orders = sorted(c.k for c in self.cells if (c.objective, c.dim) == (objective, dim))
            low = self.cell_mean(objective, dim, orders[0])
            high = self.cell_mean(objective, dim, orders[-1])
            verdicts[f"{objective} d={dim}"] = bool(high < low)
        return verdicts
