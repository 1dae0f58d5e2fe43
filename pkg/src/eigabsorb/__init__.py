"""Eigenvalue absorption into the essential spectrum, at desk scale."""
from .config import DEFAULT, Tolerances
from .families import (DiagonalTail, EssentialData, PolynomialFamily, RankOneTerm,
                       StructuredFamily, parse_family, preset, serialize_family)
from .linalg import HermitianMatrix, hermitian_eig
from .numrange import cap_check, essential_region, numerical_range_boundary, omega
from .perturbation import track, verify_absorption
from .secular import SecularModel, lambda_min

__all__ = [
    "DEFAULT", "Tolerances", "DiagonalTail", "EssentialData", "PolynomialFamily",
    "RankOneTerm", "StructuredFamily", "parse_family", "preset", "serialize_family",
    "HermitianMatrix", "hermitian_eig", "cap_check", "essential_region",
    "numerical_range_boundary", "omega", "track", "verify_absorption", "SecularModel",
    "lambda_min",
]
