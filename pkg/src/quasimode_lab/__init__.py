"""Numerical laboratory for L^p growth of quasimodes near shrinking tubes.

Flat-model quasimodes, rotated highest-weight spherical harmonics, and the
closed-form exponents they are measured against.
"""

from .errors import (
    BudgetError,
    ConsistencyError,
    ConstructionError,
    DomainError,
    LabError,
    ResolutionError,
    VerificationError,
)

__version__ = "0.1.0"
FORMAT_VERSION = "quasimode-lab/1"

__all__ = [
    "BudgetError",
    "ConsistencyError",
    "ConstructionError",
    "DomainError",
    "LabError",
    "ResolutionError",
    "VerificationError",
    "FORMAT_VERSION",
]
