"""
Diagnostic report types.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

SCHEMA_VERSION = 1


class SweepVerdict:
    SLOPE = "slope"
    EXACT = "exact"


@dataclass
class SweepReport:
    """Measured quantity over a strictly decreasing delta grid with its log-log fit."""
    quantity: str
    deltas: np.ndarray
    values: np.ndarray
    verdict: str
    fitted_slope: Optional[float] = None
    intercept: Optional[float] = None
    fit_residual: Optional[float] = None
    expected_order: Optional[int] = None
    standard_errors: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_exact(self) -> bool:
        return self.verdict == SweepVerdict.EXACT

    def rows(self) -> List[Dict[str, float]]:
        rows = []
        for i, (delta, value) in enumerate(zip(self.deltas, self.values)):
            row = {'delta': float(delta), 'value': float(value)}
            if self.standard_errors is not None:
                row['standard_error'] = float(self.standard_errors[i])
            rows.append(row)
        return rows

    def to_summary(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'quantity': self.quantity,
            'verdict': self.verdict,
            'slope': self.fitted_slope,
            'intercept': self.intercept,
            'residual': self.fit_residual,
            'expected_order': self.expected_order,
            'metadata': self.metadata,
        }


@dataclass
class IdentityReport:
    """Per-identity list of (k, q, passed) checks in exact arithmetic."""
    kmax: int
    checks: Dict[str, List[Tuple[int, Optional[int], bool]]] = field(default_factory=dict)

    def record(self, name: str, k: int, passed: bool, q: Optional[int] = None):
        self.checks.setdefault(name, []).append((k, q, bool(passed)))

    @property
    def all_passed(self) -> bool:
        return all(passed for entries in self.checks.values() for _, _, passed in entries)

    def failures(self) -> List[str]:
        failed = []
        for name, entries in self.checks.items():
            for k, q, passed in entries:
                if not passed:
                    failed.append(f"{name}(k={k})" if q is None else f"{name}(k={k}, q={q})")
        return failed

    def to_summary(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'kmax': self.kmax,
            'all_passed': self.all_passed,
            'identities': {
                name: all(passed for _, _, passed in entries)
                for name, entries in self.checks.items()
            },
            'failures': self.failures(),
        }


@dataclass
class MomentReport:
    """Monte-Carlo check of E[V U^T] = I and E[V] = 0."""
    scheme: str
    dim: int
    samples: int
    mean_vu: np.ndarray
    se_vu: np.ndarray
    mean_v: np.ndarray
    se_v: np.ndarray
    max_z: float
    z_threshold: float
    passed: bool
    plus_fraction: Optional[float] = None

    def to_summary(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'scheme': self.scheme,
            'dim': self.dim,
            'samples': self.samples,
            'max_z': self.max_z,
            'z_threshold': self.z_threshold,
            'passed': self.passed,
            'plus_fraction': self.plus_fraction,
        }
