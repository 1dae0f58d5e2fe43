"""Numerical tolerances shared across the package.

All defaults target double precision at dimensions up to a few thousand.
Override by constructing a new :class:`Tolerances` and passing it where a
``tol`` argument is accepted.
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # relative eigen-residual bound, ||Mv - lv|| <= eig * ||M||
    eig: float = 1e-10
    # orthonormality defect accepted for bases
    gram: float = 1e-10
    # relative pre-symmetrization defect accepted for Hermitian input
    hermitian: float = 1e-12
    # eigenvalues closer than cluster * ||M|| are treated as one cluster
    cluster: float = 1e-8
    # distance of tail entries to their declared limit points
    tail: float = 1e-6
    # |Sigma(t)/t - omega| accepted by the slope check
    slope: float = 1e-6
    # kernel detection, relative to ||A||
    kernel: float = 1e-8
    # floor of the beta/mu matching tolerance
    match_floor: float = 1e-4
    # band around omega reported as "at-threshold"
    threshold_band: float = 1e-6
    # entries below this magnitude are flushed to zero
    underflow: float = 1e-300

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT = Tolerances()
