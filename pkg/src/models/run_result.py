"""
Outcome of one optimizer run.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass
class IterationRecord:
    """One row of the optional per-iteration trace."""
    n: int
    theta: np.ndarray
    step_size: float
    sensitivity: float
    gradient_norm: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'theta': self.theta.tolist(),
            'step_size': self.step_size,
            'sensitivity': self.sensitivity,
            'gradient_norm': self.gradient_norm,
        }


@dataclass
class RunResult:
    final_theta: np.ndarray
    iterations: int
    measurements_used: int
    budget: int
    seed: int
    parameter_error: Optional[float] = None
    trace: Optional[List[IterationRecord]] = None
    # set when the run uses the randomized output rule
    random_index: Optional[int] = None
    random_iterate: Optional[np.ndarray] = None
    mean_squared_gradient: Optional[float] = None
    initial_squared_gradient: Optional[float] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self, include_trace: bool = False) -> Dict[str, Any]:
        payload = {
            'schema_version': 1,
            'final_theta': self.final_theta.tolist(),
            'iterations': self.iterations,
            'measurements_used': self.measurements_used,
            'budget': self.budget,
            'seed': self.seed,
            'parameter_error': self.parameter_error,
        }
        if self.random_index is not None:
            payload['random_index'] = self.random_index
            payload['random_iterate'] = self.random_iterate.tolist()
            payload['mean_squared_gradient'] = self.mean_squared_gradient
            payload['initial_squared_gradient'] = self.initial_squared_gradient
        if self.metadata:
            payload['metadata'] = self.metadata
        if include_trace and self.trace is not None:
            payload['trace'] = [record.to_dict() for record in self.trace]
        return payload
