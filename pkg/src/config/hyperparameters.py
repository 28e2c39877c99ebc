"""
Published step-size and sensitivity settings and the experiment grids.

Every method uses a(n) = a0/(n+A) and delta(n) = delta0/n^0.101.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

from src.models.errors import ConfigurationError

DEFAULT_BUDGET = 200_000
DEFAULT_REPLICATIONS = 20
DEFAULT_SIGMA = 0.001
FIGURE_SIGMA = 0.1
TABLE_DIMENSIONS = (5, 10, 50, 100)

OBJECTIVES = ("quadratic", "rastrigin")
METHODS = ("gspsa", "gsf", "grdsa", "bgspsa", "fdsa")

# method -> default perturbation family
METHOD_SCHEMES = {
    'gspsa': 'bernoulli',
    'bgspsa': 'bernoulli',
    'gsf': 'gaussian',
    'grdsa': 'uniform',
    'fdsa': None,
}


@dataclass(frozen=True)
class DecayingDefaults:
    a0: float
    A: float
    delta0: float
    gamma_a: float = 1.0
    gamma_d: float = 0.101


HYPERPARAMETERS: Dict[Tuple[str, str], DecayingDefaults] = {
    ('quadratic', 'gspsa'): DecayingDefaults(a0=1.0, A=50.0, delta0=7.9),
    ('quadratic', 'grdsa'): DecayingDefaults(a0=1.0, A=65.0, delta0=26.8),
    ('quadratic', 'gsf'): DecayingDefaults(a0=1.0, A=50.0, delta0=5.9),
    ('quadratic', 'bgspsa'): DecayingDefaults(a0=1.0, A=65.0, delta0=26.8),
    ('rastrigin', 'gspsa'): DecayingDefaults(a0=3.0, A=50.0, delta0=2.9),
    ('rastrigin', 'grdsa'): DecayingDefaults(a0=1.0, A=50.0, delta0=26.4),
    ('rastrigin', 'gsf'): DecayingDefaults(a0=1.0, A=50.0, delta0=26.8),
    ('rastrigin', 'bgspsa'): DecayingDefaults(a0=2.0, A=20.0, delta0=2.9),
}


@dataclass(frozen=True)
class TableSpec:
    """One published results table: a method over objectives x dims x orders."""
    table_id: str
    method: str
    objectives: Tuple[str, ...]
    orders: Tuple[int, ...]
    dims: Tuple[int, ...] = TABLE_DIMENSIONS


TABLES: Dict[str, TableSpec] = {
    'gspsa-rastrigin': TableSpec('gspsa-rastrigin', 'gspsa', ('rastrigin',), (1, 2, 3, 4)),
    'gspsa-quadratic': TableSpec('gspsa-quadratic', 'gspsa', ('quadratic',), (1, 2, 3, 4)),
    'grdsa': TableSpec('grdsa', 'grdsa', OBJECTIVES, (1, 4)),
    'gsf': TableSpec('gsf', 'gsf', OBJECTIVES, (1, 4)),
    'bgspsa': TableSpec('bgspsa', 'bgspsa', OBJECTIVES, (1, 2)),
}

# published mean parameter errors, (objective, method, dim, k) -> value
REFERENCE_ERRORS: Dict[Tuple[str, str, int, int], float] = {
    ('rastrigin', 'gspsa', 5, 1): 5.64e-2,
    ('rastrigin', 'gspsa', 5, 2): 5.3e-2,
    ('rastrigin', 'gspsa', 5, 3): 2.99e-2,
    ('rastrigin', 'gspsa', 5, 4): 1.39e-2,
    ('rastrigin', 'gspsa', 10, 4): 1.46e-2,
    ('quadratic', 'gspsa', 5, 1): 7.88e-3,
    ('quadratic', 'gspsa', 5, 2): 9.11e-4,
    ('quadratic', 'gspsa', 5, 3): 1.18e-3,
    ('quadratic', 'gspsa', 5, 4): 1.65e-3,
    ('rastrigin', 'bgspsa', 5, 1): 5.64e-2,
    ('rastrigin', 'bgspsa', 5, 2): 1.12e-9,
    ('rastrigin', 'bgspsa', 10, 2): 2.47e-9,
}


def get_decaying_defaults(objective: str, method: str) -> DecayingDefaults:
    """
    Published schedule for an (objective, method) pair.

    FDSA has no published schedule and borrows the GSPSA row.
    """
    key = (objective, 'gspsa' if method == 'fdsa' else method)
    try:
        return HYPERPARAMETERS[key]
    except KeyError:
        raise ConfigurationError(f"No published schedule for objective={objective!r}, method={method!r}")


def get_table_spec(table_id: str) -> TableSpec:
    try:
        return TABLES[table_id]
    except KeyError:
        raise ConfigurationError(f"Unknown table id {table_id!r}; choose from {sorted(TABLES)}")
