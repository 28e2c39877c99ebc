"""
Noisy objective functions.

Every objective observes f(theta, xi) = F(theta) + xi with the
parameter-dependent noise xi = theta^T z[:d] + z[d], z ~ N(0, sigma^2 I_{d+1}).
"""

import logging
import math
import operator
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

from src.models.errors import ConfigurationError, NumericalError
from src.models.rng_stream import RngStream

logger = logging.getLogger(__name__)


def noise_sample(theta: np.ndarray, sigma: float, rng: RngStream) -> float:
    """
    One draw of xi = theta^T z[:d] + z[d].

    Conditional on theta, xi ~ N(0, sigma^2 (|theta|^2 + 1)). sigma = 0 returns 0
    without consuming the stream.
    """
    if sigma < 0:
        raise ConfigurationError(f"Noise sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return 0.0
    theta = np.asarray(theta, dtype=float)
    z = sigma * rng.standard_normal(theta.size + 1)
    return float(theta @ z[:-1] + z[-1])


def noise_batch(points: np.ndarray, sigma: float, rng: RngStream) -> np.ndarray:
    """Row-wise noise for a (n, d) matrix of points, one fresh z per row."""
    if sigma == 0:
        return np.zeros(points.shape[0])
    z = sigma * rng.standard_normal((points.shape[0], points.shape[1] + 1))
    return np.einsum('ij,ij->i', points, z[:, :-1]) + z[:, -1]


class NoisyObjective(ABC):
    """
    Base class for objectives observed through additive noise.

    Subclasses implement `true_value_batch`; gradients and optima are optional.
    """
    name = "objective"

    def __init__(self, dim: int, sigma: float = 0.0):
        try:
            dim = operator.index(dim)
        except TypeError:
            raise ConfigurationError(f"Dimension must be an integer, got {dim!r}")
        if dim < 1:
            raise ConfigurationError(f"Dimension must be at least 1, got {dim}")
        if not (math.isfinite(sigma) and sigma >= 0):
            raise ConfigurationError(f"Noise sigma must be non-negative, got {sigma}")
        self.dim = dim
        self.noise_sigma = float(sigma)

    @abstractmethod
    def true_value_batch(self, points: np.ndarray) -> np.ndarray:
        """Noiseless F at each row of points."""

    def check_point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ConfigurationError(f"Expected a point of dimension {self.dim}, got shape {theta.shape}")
        return theta

    def true_value(self, theta) -> float:
        theta = self.check_point(theta)
        return float(self.true_value_batch(theta[None, :])[0])

    def evaluate_batch(self, points: np.ndarray, rng: Optional[RngStream]) -> np.ndarray:
        """
        Noisy measurements at each row of points, fresh noise per row.

        With rng=None the noiseless values are returned.

        Raises:
            NumericalError: some measurement is not finite
        """
        values = self.true_value_batch(points)
        if rng is not None and self.noise_sigma > 0:
            values = values + noise_batch(points, self.noise_sigma, rng)
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NumericalError(f"{self.name} returned a non-finite value", point=points[bad])
        return values

    def evaluate(self, theta, rng: Optional[RngStream]) -> float:
        theta = self.check_point(theta)
        return float(self.evaluate_batch(theta[None, :], rng)[0])

    def true_gradient(self, theta) -> np.ndarray:
        raise NotImplementedError(f"{self.name} has no analytic gradient")

    def has_gradient(self) -> bool:
        return type(self).true_gradient is not NoisyObjective.true_gradient

    def optimum(self) -> Optional[np.ndarray]:
        return None

    def default_theta0(self) -> np.ndarray:
        return np.zeros(self.dim)

    def smoothness_constant(self) -> Optional[float]:
        """Lipschitz constant of the gradient when known."""
        return None

    def describe(self) -> str:
        return f"{self.name}(d={self.dim}, sigma={self.noise_sigma:g})"


class QuadraticObjective(NoisyObjective):
    """
    F(theta) = theta^T A theta + b^T theta, A upper triangular (diagonal included)
    with entries 1/d, b the all-ones vector.
    """
    name = "quadratic"

    @property
    def matrix(self) -> np.ndarray:
        return np.triu(np.full((self.dim, self.dim), 1.0 / self.dim))

    def true_value_batch(self, points: np.ndarray) -> np.ndarray:
        # theta^T A theta = ((sum theta)^2 + sum theta^2) / (2d)
        total = points.sum(axis=1)
        return (total ** 2 + (points ** 2).sum(axis=1)) / (2.0 * self.dim) + total

    def true_gradient(self, theta) -> np.ndarray:
        theta = self.check_point(theta)
        return (theta.sum() + theta) / self.dim + 1.0

    def optimum(self) -> np.ndarray:
        return np.full(self.dim, -self.dim / (self.dim + 1.0))

    def smoothness_constant(self) -> float:
        # largest eigenvalue of (J + I)/d
        return (self.dim + 1.0) / self.dim


class RastriginObjective(NoisyObjective):
    """F(theta) = 10 d + sum(theta_i^2 - 10 cos(2 pi theta_i))."""
    name = "rastrigin"

    def true_value_batch(self, points: np.ndarray) -> np.ndarray:
        return 10.0 * self.dim + (points ** 2 - 10.0 * np.cos(2.0 * np.pi * points)).sum(axis=1)

    def true_gradient(self, theta) -> np.ndarray:
        theta = self.check_point(theta)
        return 2.0 * theta + 20.0 * np.pi * np.sin(2.0 * np.pi * theta)

    def optimum(self) -> np.ndarray:
        return np.zeros(self.dim)

    def default_theta0(self) -> np.ndarray:
        return np.full(self.dim, 2.0)

    def smoothness_constant(self) -> float:
        return 2.0 + 40.0 * np.pi ** 2


Term = Tuple[float, Tuple[int, ...]]


class PolynomialObjective(NoisyObjective):
    """Sparse polynomial sum_t c_t prod_i theta_i^alpha_{t,i}."""
    name = "polynomial"

    def __init__(self, dim: int, terms: Sequence[Term], sigma: float = 0.0):
        super().__init__(dim, sigma)
        coefficients, exponents = [], []
        for coefficient, alpha in terms:
            if len(alpha) != self.dim or any(a < 0 for a in alpha):
                raise ConfigurationError(f"Exponent {alpha} does not match dimension {self.dim}")
            coefficients.append(float(coefficient))
            exponents.append(tuple(int(a) for a in alpha))
        self.coefficients = np.array(coefficients)
        self.exponents = np.array(exponents, dtype=int).reshape(len(exponents), self.dim)

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max()) if len(self.exponents) else 0

    def true_value_batch(self, points: np.ndarray) -> np.ndarray:
        # (n, 1, d) ** (1, t, d) -> (n, t, d)
        monomials = np.prod(points[:, None, :] ** self.exponents[None, :, :], axis=2)
        return monomials @ self.coefficients

    def true_gradient(self, theta) -> np.ndarray:
        theta = self.check_point(theta)
        gradient = np.zeros(self.dim)
        for coefficient, alpha in zip(self.coefficients, self.exponents):
            for i in range(self.dim):
                if alpha[i] == 0:
                    continue
                lowered = alpha.copy()
                lowered[i] -= 1
                gradient[i] += coefficient * alpha[i] * np.prod(theta ** lowered)
        return gradient


class RidgePowerObjective(NoisyObjective):
    """
    F(theta) = (c^T theta + s)^m.

    All mixed moments of (c^T U)^q against U_i are non-negative for c >= 0,
    so the leading bias term of any estimator is nonzero.
    """
    name = "ridge-power"

    def __init__(self, direction: Sequence[float], degree: int, offset: float = 0.0, sigma: float = 0.0):
        direction = np.asarray(direction, dtype=float)
        super().__init__(direction.size, sigma)
        if degree < 1:
            raise ConfigurationError(f"Ridge degree must be at least 1, got {degree}")
        self.direction = direction
        self.degree = int(degree)
        self.offset = float(offset)

    def true_value_batch(self, points: np.ndarray) -> np.ndarray:
        return (points @ self.direction + self.offset) ** self.degree

    def true_gradient(self, theta) -> np.ndarray:
        theta = self.check_point(theta)
        return self.degree * (theta @ self.direction + self.offset) ** (self.degree - 1) * self.direction


class CountingObjective(NoisyObjective):
    """Wraps an objective and counts noisy evaluations. Not thread-safe."""

    def __init__(self, inner: NoisyObjective):
        super().__init__(inner.dim, inner.noise_sigma)
        self.inner = inner
        self.name = inner.name
        self.evaluations = 0

    def true_value_batch(self, points: np.ndarray) -> np.ndarray:
        return self.inner.true_value_batch(points)

    def evaluate_batch(self, points: np.ndarray, rng: Optional[RngStream]) -> np.ndarray:
        self.evaluations += points.shape[0]
        return self.inner.evaluate_batch(points, rng)

    def true_gradient(self, theta) -> np.ndarray:
        return self.inner.true_gradient(theta)

    def has_gradient(self) -> bool:
        return self.inner.has_gradient()

    def optimum(self) -> Optional[np.ndarray]:
        return self.inner.optimum()

    def default_theta0(self) -> np.ndarray:
        return self.inner.default_theta0()

    def smoothness_constant(self) -> Optional[float]:
        return self.inner.smoothness_constant()


def make_quadratic(d: int, sigma: float = 0.0) -> QuadraticObjective:
    return QuadraticObjective(d, sigma)


def make_rastrigin(d: int, sigma: float = 0.0) -> RastriginObjective:
    return RastriginObjective(d, sigma)


def make_linear(c: Sequence[float], sigma: float = 0.0) -> PolynomialObjective:
    c = np.asarray(c, dtype=float)
    terms = [(c[i], tuple(int(i == j) for j in range(c.size))) for i in range(c.size)]
    return PolynomialObjective(c.size, terms, sigma)


def random_polynomial(d: int, degree: int, rng: RngStream, n_terms: int = 6) -> PolynomialObjective:
    """Random noiseless polynomial with total degree exactly `degree`."""
    generator = rng.generator
    terms = []
    for t in range(n_terms):
        total = degree if t == 0 else int(generator.integers(0, degree + 1))
        alpha = tuple(int(a) for a in generator.multinomial(total, np.full(d, 1.0 / d)))
        terms.append((float(generator.uniform(-1.0, 1.0)), alpha))
    return PolynomialObjective(d, terms)


OBJECTIVE_FACTORIES = {
    'quadratic': make_quadratic,
    'rastrigin': make_rastrigin,
}


def make_objective(name: str, dim: int, sigma: float = 0.0) -> NoisyObjective:
    """Objective by string id: 'quadratic' or 'rastrigin'."""
    try:
        factory = OBJECTIVE_FACTORIES[name]
    except KeyError:
        raise ConfigurationError(f"Unknown objective {name!r}; choose from {sorted(OBJECTIVE_FACTORIES)}")
    objective = factory(dim, sigma)
    logger.debug("Built objective %s", objective.describe())
    return objective
