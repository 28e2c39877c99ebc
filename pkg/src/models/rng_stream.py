"""
Seedable random stream backed by a counter-based bit generator.
"""

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from src.models.errors import ConfigurationError

MAX_SEED = 2 ** 64

Size = Union[int, Tuple[int, ...]]


def _count(size: Size) -> int:
    return int(np.prod(size)) if isinstance(size, tuple) else int(size)


@dataclass
class RngStream:
    """
    Deterministic stream of variates.

    A stream is identified by its seed and spawn key; `position` counts the
    variates drawn so far. Streams must not be shared across threads.
    """
    seed: int
    spawn_key: Tuple[int, ...] = ()
    position: int = field(default=0, init=False)
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ConfigurationError(f"Seed must be an integer, got {self.seed!r}")
        self.seed = int(self.seed)
        if not 0 <= self.seed < MAX_SEED:
            raise ConfigurationError(f"Seed must satisfy 0 <= seed < 2**64, got {self.seed}")
        sequence = np.random.SeedSequence(self.seed, spawn_key=tuple(self.spawn_key))
        self._generator = np.random.Generator(np.random.Philox(sequence))
        self.position = 0

    def spawn(self, index: int) -> 'RngStream':
        """Independent child stream for a sub-task."""
        return RngStream(self.seed, spawn_key=tuple(self.spawn_key) + (int(index),))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def standard_normal(self, size: Size) -> np.ndarray:
        self.position += _count(size)
        return self._generator.standard_normal(size)

    def uniform(self, low: float, high: float, size: Size) -> np.ndarray:
        self.position += _count(size)
        return self._generator.uniform(low, high, size)

    def random(self, size: Size) -> np.ndarray:
        self.position += _count(size)
        return self._generator.random(size)

    def integers(self, low: int, high: int, size: Size = None):
        self.position += 1 if size is None else _count(size)
        return self._generator.integers(low, high, size=size)
