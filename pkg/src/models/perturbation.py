"""
Perturbation scheme definitions.

A scheme fixes the law of the direction vector U; the weight vector V is
always a deterministic scalar multiple of U so that E[V U^T] = I.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from src.models.errors import ConfigurationError


class PerturbationKind(str, Enum):
    """Perturbation family, valued by its short string id."""
    SYMMETRIC_BERNOULLI = "bernoulli"
    GAUSSIAN = "gaussian"
    SPHERE = "sphere"
    UNIFORM = "uniform"
    ASYMMETRIC_BERNOULLI = "asym-bernoulli"


DEFAULT_ETA = 1.0


@dataclass(frozen=True)
class PerturbationScheme:
    """
    Direction law for simultaneous perturbation estimators.

    Attributes:
        kind: perturbation family
        eta: half-width of the interval for UNIFORM
        epsilon: skew of ASYMMETRIC_BERNOULLI
    """
    kind: PerturbationKind
    eta: float = DEFAULT_ETA
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.kind, PerturbationKind):
            try:
                object.__setattr__(self, 'kind', PerturbationKind(self.kind))
            except ValueError:
                raise ConfigurationError(f"Unknown perturbation scheme: {self.kind!r}")
        if self.kind is PerturbationKind.UNIFORM:
            if not (math.isfinite(self.eta) and self.eta > 0):
                raise ConfigurationError(f"Interval half-width eta must be positive, got {self.eta}")
        if self.kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
            if self.epsilon is None or not (math.isfinite(self.epsilon) and self.epsilon > 0):
                raise ConfigurationError(f"Asymmetric Bernoulli skew epsilon must be positive, got {self.epsilon}")

    @classmethod
    def bernoulli(cls) -> 'PerturbationScheme':
        return cls(PerturbationKind.SYMMETRIC_BERNOULLI)

    @classmethod
    def gaussian(cls) -> 'PerturbationScheme':
        return cls(PerturbationKind.GAUSSIAN)

    @classmethod
    def sphere(cls) -> 'PerturbationScheme':
        return cls(PerturbationKind.SPHERE)

    @classmethod
    def uniform(cls, eta: float = DEFAULT_ETA) -> 'PerturbationScheme':
        return cls(PerturbationKind.UNIFORM, eta=float(eta))

    @classmethod
    def asymmetric_bernoulli(cls, epsilon: float) -> 'PerturbationScheme':
        return cls(PerturbationKind.ASYMMETRIC_BERNOULLI, epsilon=float(epsilon))

    @classmethod
    def parse(cls, text: str) -> 'PerturbationScheme':
        """
        Parse the short string form.

        Accepted: "bernoulli", "gaussian", "sphere", "uniform[:eta]",
        "asym-bernoulli:epsilon".
        """
        name, _, param = text.strip().lower().partition(':')
        try:
            kind = PerturbationKind(name)
        except ValueError:
            raise ConfigurationError(f"Unknown perturbation scheme: {text!r}")

        value = None
        if param:
            if kind not in (PerturbationKind.UNIFORM, PerturbationKind.ASYMMETRIC_BERNOULLI):
                raise ConfigurationError(f"Scheme {name!r} takes no parameter: {text!r}")
            try:
                value = float(param)
            except ValueError:
                raise ConfigurationError(f"Invalid scheme parameter in {text!r}")

        if kind is PerturbationKind.UNIFORM:
            return cls.uniform(DEFAULT_ETA if value is None else value)
        if kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
            if value is None:
                raise ConfigurationError("asym-bernoulli requires a skew, e.g. 'asym-bernoulli:0.1'")
            return cls.asymmetric_bernoulli(value)
        return cls(kind)

    def to_string(self) -> str:
        if self.kind is PerturbationKind.UNIFORM:
            return f"{self.kind.value}:{self.eta:g}"
        if self.kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
            return f"{self.kind.value}:{self.epsilon:g}"
        return self.kind.value

    def __str__(self) -> str:
        return self.to_string()

    @property
    def is_symmetric(self) -> bool:
        """True when U and -U have the same law (all odd moments vanish)."""
        return self.kind is not PerturbationKind.ASYMMETRIC_BERNOULLI

    @property
    def is_two_point(self) -> bool:
        return self.kind in (PerturbationKind.SYMMETRIC_BERNOULLI, PerturbationKind.ASYMMETRIC_BERNOULLI)

    def v_scale(self, d: int) -> float:
        """Scalar c with V = c * U."""
        if self.kind is PerturbationKind.SPHERE:
            return float(d)
        if self.kind is PerturbationKind.UNIFORM:
            return 3.0 / self.eta ** 2
        if self.kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
            return 1.0 / (1.0 + self.epsilon)
        return 1.0

    def v_second_moment(self, d: int) -> float:
        """E[V_i^2], the bound required by the moment assumption."""
        if self.kind is PerturbationKind.SPHERE:
            # V_i = d U_i with E[U_i^2] = 1/d
            return float(d)
        if self.kind is PerturbationKind.UNIFORM:
            return 3.0 / self.eta ** 2
        if self.kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
            return 1.0 / (1.0 + self.epsilon)
        return 1.0

    def minus_probability(self) -> float:
        """P(U_i = -1) for the two-point schemes."""
        if self.kind is PerturbationKind.SYMMETRIC_BERNOULLI:
            return 0.5
        if self.kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
            return (1.0 + self.epsilon) / (2.0 + self.epsilon)
        raise ConfigurationError(f"Scheme {self} is not a two-point law")

    def plus_value(self) -> float:
        """Positive support point of the two-point schemes."""
        if self.kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
            return 1.0 + self.epsilon
        if self.kind is PerturbationKind.SYMMETRIC_BERNOULLI:
            return 1.0
        raise ConfigurationError(f"Scheme {self} is not a two-point law")
