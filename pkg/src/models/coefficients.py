"""
Coefficient tables for the one-sided and balanced estimators.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class OneSidedCoefficients:
    """Weights w_0..w_k1 applied to measurements at offsets 0..k1 (times delta U)."""
    k1: int
    exact: Tuple[Fraction, ...]
    weights: np.ndarray = field(compare=False, repr=False)

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.k1 + 1, dtype=float)

    @property
    def measurements(self) -> int:
        return self.k1 + 1


@dataclass(frozen=True)
class BalancedCoefficients:
    """Weights b_0..b_{k2-1} applied to half-differences at offsets +-(2j+1)."""
    k2: int
    exact: Tuple[Fraction, ...]
    weights: np.ndarray = field(compare=False, repr=False)

    @property
    def offsets(self) -> np.ndarray:
        return 2.0 * np.arange(self.k2, dtype=float) + 1.0

    @property
    def measurements(self) -> int:
        return 2 * self.k2

    @property
    def measurement_weights(self) -> np.ndarray:
        """Per-measurement weights b_j / 2 (e.g. 27/48 and -1/48 for k2 = 2)."""
        return self.weights / 2.0
