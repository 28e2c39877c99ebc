"""
Estimator configuration.
"""

import math
import operator
from dataclasses import dataclass, field, replace
from enum import Enum

from src.models.errors import ConfigurationError
from src.models.perturbation import PerturbationScheme

MAX_ONE_SIDED_ORDER = 12
MAX_BALANCED_ORDER = 8


class EstimatorSide(str, Enum):
    ONE_SIDED = "one-sided"
    BALANCED = "balanced"
    FDSA = "fdsa"


@dataclass(frozen=True)
class EstimatorConfig:
    """
    Which estimator to assemble and with what sensitivity.

    `order` is k1 for ONE_SIDED, k2 for BALANCED and unused for FDSA.
    FDSA ignores the scheme.
    """
    side: EstimatorSide
    order: int = 1
    scheme: PerturbationScheme = field(default_factory=PerturbationScheme.bernoulli)
    delta: float = 0.1

    def __post_init__(self):
        if not isinstance(self.side, EstimatorSide):
            object.__setattr__(self, 'side', EstimatorSide(self.side))
        if not (isinstance(self.delta, (int, float)) and math.isfinite(self.delta) and self.delta > 0):
            raise ConfigurationError(f"Sensitivity delta must be positive and finite, got {self.delta}")
        if self.side is EstimatorSide.FDSA:
            return
        try:
            object.__setattr__(self, 'order', operator.index(self.order))
        except TypeError:
            raise ConfigurationError(f"Estimator order must be an integer, got {self.order!r}")
        upper = MAX_ONE_SIDED_ORDER if self.side is EstimatorSide.ONE_SIDED else MAX_BALANCED_ORDER
        if not 1 <= self.order <= upper:
            raise ConfigurationError(f"{self.side.value} order must lie in [1, {upper}], got {self.order}")

    @classmethod
    def one_sided(cls, k1: int, scheme: PerturbationScheme = None, delta: float = 0.1) -> 'EstimatorConfig':
        return cls(EstimatorSide.ONE_SIDED, k1, scheme or PerturbationScheme.bernoulli(), delta)

    @classmethod
    def balanced(cls, k2: int, scheme: PerturbationScheme = None, delta: float = 0.1) -> 'EstimatorConfig':
        return cls(EstimatorSide.BALANCED, k2, scheme or PerturbationScheme.bernoulli(), delta)

    @classmethod
    def fdsa(cls, delta: float = 0.1) -> 'EstimatorConfig':
        return cls(EstimatorSide.FDSA, 0, PerturbationScheme.bernoulli(), delta)

    def measurements_per_iteration(self, d: int) -> int:
        if self.side is EstimatorSide.ONE_SIDED:
            return self.order + 1
        if self.side is EstimatorSide.BALANCED:
            return 2 * self.order
        return 2 * d

    def with_delta(self, delta: float) -> 'EstimatorConfig':
        return replace(self, delta=delta)

    def describe(self) -> str:
        if self.side is EstimatorSide.FDSA:
            return f"fdsa(delta={self.delta:g})"
        label = "k1" if self.side is EstimatorSide.ONE_SIDED else "k2"
        return f"{self.side.value}({label}={self.order}, {self.scheme}, delta={self.delta:g})"
