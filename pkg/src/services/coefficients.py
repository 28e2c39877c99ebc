"""
Exact coefficient tables for the one-sided and balanced estimators.

Weights are built in rational arithmetic and converted to float64 once.
"""

import logging
import math
import operator
from fractions import Fraction
from functools import lru_cache
from typing import List

import numpy as np
import pandas as pd

from src.models.coefficients import BalancedCoefficients, OneSidedCoefficients
from src.models.errors import ConfigurationError
from src.models.estimator_config import MAX_BALANCED_ORDER, MAX_ONE_SIDED_ORDER

logger = logging.getLogger(__name__)


def _check_order(name: str, k, upper: int) -> int:
    try:
        k = operator.index(k)
    except TypeError:
        raise ConfigurationError(f"{name} must be an integer, got {k!r}")
    if not 1 <= k <= upper:
        raise ConfigurationError(f"{name} must lie in [1, {upper}], got {k}")
    return k


def harmonic_number(k: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def series_coefficient(k1: int, l: int) -> Fraction:
    """C^{k1}_l: H_k1 for l = 0, otherwise (1/l) * k1 (k1-1) ... (k1-l+1)."""
    if l == 0:
        return harmonic_number(k1)
    falling = 1
    for j in range(l):
        falling *= k1 - j
    return Fraction(falling, l)


def kappa(i: int) -> Fraction:
    """K_i = (2i)! / (2^{4i} (i!)^2 (2i+1))."""
    return Fraction(math.factorial(2 * i), 2 ** (4 * i) * math.factorial(i) ** 2 * (2 * i + 1))


@lru_cache(maxsize=None)
def onesided_coefficients(k1: int) -> OneSidedCoefficients:
    """
    Weights w_l = (-1)^(1-l) C^{k1}_l / l! for l = 0..k1.

    Examples: k1=1 -> [-1, 1]; k1=2 -> [-3/2, 2, -1/2].
    """
    k1 = _check_order('k1', k1, MAX_ONE_SIDED_ORDER)
    exact = tuple(
        (-1) ** ((1 - l) % 2) * series_coefficient(k1, l) / math.factorial(l)
        for l in range(k1 + 1)
    )
    weights = np.array([float(w) for w in exact])
    weights.setflags(write=False)
    return OneSidedCoefficients(k1=k1, exact=exact, weights=weights)


@lru_cache(maxsize=None)
def balanced_coefficients(k2: int) -> BalancedCoefficients:
    """
    Weights b_j = (-1)^j sum_{i=j}^{k2-1} K_i binom(2i+1, i-j) for j = 0..k2-1.

    b_j multiplies the half-difference at offsets +-(2j+1) delta U.
    Example: k2=2 -> [9/8, -1/24].
    """
    k2 = _check_order('k2', k2, MAX_BALANCED_ORDER)
    exact = tuple(
        (-1) ** j * sum((kappa(i) * math.comb(2 * i + 1, i - j) for i in range(j, k2)), Fraction(0))
        for j in range(k2)
    )
    weights = np.array([float(b) for b in exact])
    weights.setflags(write=False)
    return BalancedCoefficients(k2=k2, exact=exact, weights=weights)


def onesided_sum_rule(k1: int, q: int) -> Fraction:
    """sum_l l^q w_l in exact arithmetic (0^0 taken as 1)."""
    coefficients = onesided_coefficients(k1)
    return sum((w * Fraction(l) ** q for l, w in enumerate(coefficients.exact)), Fraction(0))


def balanced_sum_rule(k2: int, q: int) -> Fraction:
    """sum_j b_j (2j+1)^q in exact arithmetic."""
    coefficients = balanced_coefficients(k2)
    return sum((b * Fraction(2 * j + 1) ** q for j, b in enumerate(coefficients.exact)), Fraction(0))


def coefficient_table(kind: str, kmax: int) -> pd.DataFrame:
    """
    Audit table of coefficients for orders 1..kmax.

    Args:
        kind: 'onesided' or 'balanced'
        kmax: largest order to include

    Returns:
        DataFrame with columns k, index, offset, exact, value
    """
    rows: List[dict] = []
    if kind == 'onesided':
        kmax = _check_order('kmax', kmax, MAX_ONE_SIDED_ORDER)
        for k in range(1, kmax + 1):
            for l, w in enumerate(onesided_coefficients(k).exact):
                rows.append({'k': k, 'index': l, 'offset': l, 'exact': str(w), 'value': float(w)})
    elif kind == 'balanced':
        kmax = _check_order('kmax', kmax, MAX_BALANCED_ORDER)
        for k in range(1, kmax + 1):
            for j, b in enumerate(balanced_coefficients(k).exact):
                rows.append({'k': k, 'index': j, 'offset': 2 * j + 1, 'exact': str(b), 'value': float(b)})
    else:
        raise ConfigurationError(f"Unknown coefficient kind {kind!r}; use 'onesided' or 'balanced'")

    logger.debug("Built %s coefficient table with %d rows", kind, len(rows))
    return pd.DataFrame(rows, columns=['k', 'index', 'offset', 'exact', 'value'])
