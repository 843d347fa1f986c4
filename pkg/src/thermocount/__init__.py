"""Thermodynamic formalism on countable Markov shifts.

Submodules:

- ``shift_core``: shifts, truncations, admissible words, periodic points
- ``potential``: certified potentials, Birkhoff sums, regularization
- ``thermo``: transfer operators, pressure, Bowen roots, entropy gaps
- ``counting``: renewal functions and exact closed-orbit counts
- ``manhattan``: Manhattan curves and pressure intersections
- ``fuchsian``: cusped Fuchsian codings, Iwasawa cocycles, roof functions
- ``cli``: the ``thermocount`` command
"""

from .errors import (
    BudgetExceeded,
    ConfigError,
    InvalidInput,
    NumericalFailure,
    ThermoError,
)
from .potential import Potential, constant, letter_potential, log_letter, pair_potential, regularize
from .shift_core import (
    FirstK,
    WeightBelow,
    build_truncation,
    enumerate_fix,
    full_shift,
    matrix_shift,
    no_aa_shift,
    truncate_finite,
)
from .thermo import build_transfer, critical_exponent, entropy_gap_report, solve_delta, spectral_pressure

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "ConfigError",
    "FirstK",
    "InvalidInput",
    "NumericalFailure",
    "Potential",
    "ThermoError",
    "WeightBelow",
    "build_transfer",
    "build_truncation",
    "constant",
    "critical_exponent",
    "entropy_gap_report",
    "enumerate_fix",
    "full_shift",
    "letter_potential",
    "log_letter",
    "matrix_shift",
    "no_aa_shift",
    "pair_potential",
    "regularize",
    "solve_delta",
    "spectral_pressure",
    "truncate_finite",
]
