"""
Step-size and sensitivity schedules.

Decaying:  a(n) = a0 / (n + A)^gamma_a,  delta(n) = delta0 / n^gamma_d
Constant:  a(n) = a,                     delta(n) = delta
Iterations are indexed from n = 1.
"""

import math
import re
from dataclasses import dataclass
from enum import Enum

from src.models.errors import ConfigurationError


class ScheduleKind(str, Enum):
    DECAYING = "decaying"
    CONSTANT = "constant"


_NUMBER = r'([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)'
_DECAYING_PATTERN = re.compile(
    rf'^\s*{_NUMBER}\s*/\s*\(\s*n\s*\+\s*{_NUMBER}\s*\)\s*\^\s*{_NUMBER}\s*\|\s*{_NUMBER}\s*/\s*n\s*\^\s*{_NUMBER}\s*$'
)
_CONSTANT_PATTERN = re.compile(rf'^\s*{_NUMBER}\s*\|\s*{_NUMBER}\s*$')


def _positive(name: str, value: float):
    if not (math.isfinite(value) and value > 0):
        raise ConfigurationError(f"Schedule constant {name} must be positive, got {value}")


@dataclass(frozen=True)
class Schedule:
    kind: ScheduleKind
    a0: float
    delta0: float
    A: float = 0.0
    gamma_a: float = 1.0
    gamma_d: float = 0.101

    def __post_init__(self):
        _positive('a0', self.a0)
        _positive('delta0', self.delta0)
        if self.kind is ScheduleKind.DECAYING:
            if not (math.isfinite(self.A) and self.A >= 0):
                raise ConfigurationError(f"Schedule offset A must be non-negative, got {self.A}")
            for name in ('gamma_a', 'gamma_d'):
                value = getattr(self, name)
                if not (math.isfinite(value) and value >= 0):
                    raise ConfigurationError(f"Schedule exponent {name} must be non-negative, got {value}")

    @classmethod
    def decaying(cls, a0: float, A: float, delta0: float, gamma_d: float, gamma_a: float = 1.0) -> 'Schedule':
        return cls(ScheduleKind.DECAYING, float(a0), float(delta0), float(A), float(gamma_a), float(gamma_d))

    @classmethod
    def constant(cls, a: float, delta: float) -> 'Schedule':
        return cls(ScheduleKind.CONSTANT, float(a), float(delta), 0.0, 0.0, 0.0)

    def step_size(self, n: int) -> float:
        if self.kind is ScheduleKind.CONSTANT:
            return self.a0
        return self.a0 / (n + self.A) ** self.gamma_a

    def sensitivity(self, n: int) -> float:
        if self.kind is ScheduleKind.CONSTANT:
            return self.delta0
        return self.delta0 / n ** self.gamma_d

    def satisfies_step_conditions(self) -> bool:
        """
        Sum a(n) diverges and sum (a(n)/delta(n))^2 converges.

        Holds for decaying schedules with gamma_a <= 1 and gamma_a - gamma_d > 1/2;
        never for constant schedules.
        """
        if self.kind is ScheduleKind.CONSTANT:
            return False
        return self.gamma_a <= 1.0 and self.gamma_a - self.gamma_d > 0.5

    def describe(self) -> str:
        if self.kind is ScheduleKind.CONSTANT:
            return f"{self.a0:g} | {self.delta0:g}"
        return f"{self.a0:g}/(n+{self.A:g})^{self.gamma_a:g} | {self.delta0:g}/n^{self.gamma_d:g}"

    @classmethod
    def parse(cls, text: str) -> 'Schedule':
        """Inverse of describe()."""
        match = _DECAYING_PATTERN.match(text)
        if match:
            a0, A, gamma_a, delta0, gamma_d = (float(x) for x in match.groups())
            return cls.decaying(a0, A, delta0, gamma_d, gamma_a)
        match = _CONSTANT_PATTERN.match(text)
        if match:
            a, delta = (float(x) for x in match.groups())
            return cls.constant(a, delta)
        raise ConfigurationError(f"Cannot parse schedule: {text!r}")

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'a0': self.a0,
            'A': self.A,
            'gamma_a': self.gamma_a,
            'delta0': self.delta0,
            'gamma_d': self.gamma_d,
            'describe': self.describe(),
        }
