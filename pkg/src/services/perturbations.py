"""
Sampling of perturbation directions U and weights V.
"""

import operator
from typing import NamedTuple, Tuple

import numpy as np

from src.models.errors import ConfigurationError, EnumerationError
from src.models.perturbation import PerturbationKind, PerturbationScheme
from src.models.rng_stream import RngStream

MAX_ENUMERATION_DIM = 12


class TwoPointSupport(NamedTuple):
    """All 2^d direction patterns of a two-point scheme with their probabilities."""
    u: np.ndarray
    v: np.ndarray
    probabilities: np.ndarray


def _check_dimension(d) -> int:
    try:
        d = operator.index(d)
    except TypeError:
        raise ConfigurationError(f"Dimension must be an integer, got {d!r}")
    if d < 1:
        raise ConfigurationError(f"Dimension must be at least 1, got {d}")
    return d


def _draw_directions(scheme: PerturbationScheme, d: int, rng: RngStream, n: int) -> np.ndarray:
    shape = (n, d)
    kind = scheme.kind
    if kind is PerturbationKind.SYMMETRIC_BERNOULLI:
        return 2.0 * rng.integers(0, 2, size=shape) - 1.0
    if kind is PerturbationKind.GAUSSIAN:
        return rng.standard_normal(shape)
    if kind is PerturbationKind.SPHERE:
        z = rng.standard_normal(shape)
        return z / np.linalg.norm(z, axis=1, keepdims=True)
    if kind is PerturbationKind.UNIFORM:
        return rng.uniform(-scheme.eta, scheme.eta, shape)
    if kind is PerturbationKind.ASYMMETRIC_BERNOULLI:
        minus = rng.random(shape) < scheme.minus_probability()
        return np.where(minus, -1.0, scheme.plus_value())
    raise ConfigurationError(f"Unsupported perturbation scheme {scheme}")


def sample_uv_batch(scheme: PerturbationScheme, d: int, rng: RngStream, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw n independent (U, V) pairs.

    Returns:
        (U, V), both of shape (n, d)
    """
    d = _check_dimension(d)
    if n < 1:
        raise ConfigurationError(f"Sample count must be at least 1, got {n}")
    u = _draw_directions(scheme, d, rng, n)
    return u, scheme.v_scale(d) * u


def sample_uv(scheme: PerturbationScheme, d: int, rng: RngStream) -> Tuple[np.ndarray, np.ndarray]:
    """Draw one (U, V) pair of length d."""
    u, v = sample_uv_batch(scheme, d, rng, 1)
    return u[0], v[0]


def enumerate_two_point(scheme: PerturbationScheme, d: int) -> TwoPointSupport:
    """
    Full support of a two-point scheme in dimension d.

    Raises:
        EnumerationError: scheme is not two-point or d exceeds 12
    """
    d = _check_dimension(d)
    if not scheme.is_two_point:
        raise EnumerationError(f"Exact enumeration needs a two-point scheme, got {scheme}")
    if d > MAX_ENUMERATION_DIM:
        raise EnumerationError(f"Exact enumeration limited to d <= {MAX_ENUMERATION_DIM}, got d={d}")

    bits = (np.arange(2 ** d)[:, None] >> np.arange(d)) & 1
    p_minus = scheme.minus_probability()
    u = np.where(bits == 1, scheme.plus_value(), -1.0)
    probabilities = np.prod(np.where(bits == 1, 1.0 - p_minus, p_minus), axis=1)
    return TwoPointSupport(u=u, v=scheme.v_scale(d) * u, probabilities=probabilities)
