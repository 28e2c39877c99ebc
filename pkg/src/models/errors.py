"""
Exception hierarchy for the gradient estimation toolkit.

Low-level operations raise these; the orchestrator and the CLI catch them per
unit of work and turn them into failure records or JSON error payloads.
"""

from typing import Any, Dict, Optional

import numpy as np


class GspgsError(Exception):
    """Base class for every error raised by the toolkit."""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error': type(self).__name__,
            'message': str(self),
        }


class ConfigurationError(GspgsError, ValueError):
    """Invalid scheme, order, schedule, budget, dimension or seed."""


class EnumerationError(ConfigurationError):
    """Exact enumeration requested where it is infeasible."""


class NumericalError(GspgsError, ArithmeticError):
    """Objective returned a non-finite value."""

    def __init__(self, message: str, point: Optional[np.ndarray] = None):
        super().__init__(message)
        self.point = None if point is None else np.array(point, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        if self.point is not None:
            payload['point'] = self.point.tolist()
        return payload


class DivergenceError(GspgsError):
    """Iterate became non-finite or left the divergence guard."""

    def __init__(self, message: str, iteration: int, last_theta: np.ndarray):
        super().__init__(message)
        self.iteration = iteration
        self.last_theta = np.array(last_theta, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload['iteration'] = self.iteration
        payload['last_theta'] = self.last_theta.tolist()
        return payload


class UndefinedMetricError(GspgsError, ValueError):
    """Parameter error requested with theta0 equal to the optimum."""
