"""Worked examples: the Volterra family and the two rank-one secular models.

The Volterra operator ``(Vf)(t) = int_0^t f`` on L^2(0, 1) is discretized by
midpoint collocation, ``(V_N)_{ij} = h`` below the diagonal and ``h/2`` on
it.  With that diagonal, ``Re V_N = (h/2) J`` (J the all-ones matrix) is
exactly rank one with eigenvalue 1/2, mirroring the continuous ``Re V``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .families import example62_family
from .linalg import HermitianMatrix, PreconditionError, compress, eigvalsh
from .perturbation import kernel_projection
from .secular import SecularModel, example62_weights


@dataclass(frozen=True, eq=False)
class VolterraDiscretization:
    N: int
    matrix: np.ndarray
    scheme: str = "midpoint"

    @property
    def h(self) -> float:
        return 1.0 / self.N

    def nodes(self) -> np.ndarray:
        return (np.arange(1, self.N + 1) - 0.5) * self.h

    def real_part(self) -> np.ndarray:
        return (self.matrix + self.matrix.T) / 2

    def imag_part(self) -> np.ndarray:
        return (self.matrix - self.matrix.T) / 2j


def volterra_matrix(N: int) -> VolterraDiscretization:
    if N < 8:
        raise PreconditionError(f"Volterra discretization needs N >= 8, got {N}")
    h = 1.0 / N
    V = np.tril(np.full((N, N), h), -1) + np.eye(N) * (h / 2)
    V.setflags(write=False)
    return VolterraDiscretization(N, V)


def volterra_theta(N: int | VolterraDiscretization, theta: float) -> HermitianMatrix:
    """``cos(theta) Re V_N + sin(theta) Im V_N``, i.e. ``Re(e^{-i theta} V_N)``."""
    disc = N if isinstance(N, VolterraDiscretization) else volterra_matrix(N)
    M = math.cos(theta) * disc.real_part() + math.sin(theta) * disc.imag_part()
    return HermitianMatrix.from_array(M)


class PoleError(ValueError):
    pass


def volterra_exact_eigs(theta: float, n_range) -> np.ndarray:
    """``sin(theta) / (2 theta + 2 n pi)`` for each n; at theta = 0 the n = 0 limit is 1/2."""
    out = []
    for n in n_range:
        den = 2 * theta + 2 * n * math.pi
        if theta == 0 and n == 0:
            out.append(0.5)
        elif theta == 0:
            out.append(0.0)
        elif abs(den) < 1e-14:
            raise PoleError(f"2*theta + 2*n*pi vanishes at n={n}")
        else:
            out.append(math.sin(theta) / den)
    return np.array(out)


def _leading_ns(theta: float, count: int) -> list[int]:
    """Indices n of the ``count`` largest |lambda_n|, ties broken toward n >= 0."""
    K = count + 2
    ns = list(range(-K, K + 1))
    if theta == 0:
        return [0] + [n for n in sorted(ns, key=lambda n: (abs(n), -n)) if n != 0][:count - 1]
    mags = {n: abs(math.sin(theta) / (2 * theta + 2 * n * math.pi)) for n in ns
            if abs(2 * theta + 2 * n * math.pi) > 1e-14}
    return sorted(mags, key=lambda n: (-mags[n], -n))[:count]


@dataclass(frozen=True)
class VolterraReport:
    N: int
    theta: float
    eig_rows: tuple          # (n, exact, computed, error)
    max_rel_error: float
    kernel_rank: int
    compression_rows: tuple  # (n, predicted, computed, rel_error)
    max_compression_error: float

    def key_values(self):
        return [("N", self.N), ("theta", self.theta), ("max_rel_error", self.max_rel_error),
                ("kernel_rank", self.kernel_rank),
                ("max_compression_error", self.max_compression_error)]


VOLTERRA_HEADER = ("n", "exact", "computed", "rel_error")


def _pair_sorted(exact, computed):
    order_e = np.argsort(exact)
    order_c = np.sort(computed)
    return order_e, order_c


def volterra_verify(N: int, theta: float, n_count: int = 5, compare_count: int = 4,
                    kernel_factor: float = 3.0) -> VolterraReport:
    """Discrete vs closed-form spectrum, plus the predicted derivatives at theta = 0.

    Part (i) pairs the ``n_count`` largest-magnitude eigenvalues of
    ``V_N(theta)`` with the closed-form values, both sorted.  Errors are
    relative, or absolute for a zero target.  Part (ii) compresses
    ``Im V_N`` onto the numerical kernel of ``Re V_N`` (tolerance
    ``kernel_factor * h``) and compares its ``compare_count``
    largest-magnitude eigenvalues with ``1/(2 pi n)``, n = +-1, +-2, ...
    """
    if N < 128:
        raise PreconditionError(f"volterra_verify needs N >= 128, got {N}")
    disc = volterra_matrix(N)
    vals = eigvalsh(volterra_theta(disc, theta))
    top = vals[np.argsort(-np.abs(vals), kind="stable")[:n_count]]
    ns = _leading_ns(theta, n_count)
    exact = volterra_exact_eigs(theta, ns)
    order = np.argsort(exact, kind="stable")
    comp = np.sort(top)
    rows = []
    for k, idx in enumerate(order):
        e, c = float(exact[idx]), float(comp[k])
        err = abs(c - e) / abs(e) if e != 0 else abs(c - e)
        rows.append((ns[idx], e, c, err))
    max_err = max(r[3] for r in rows)

    P = kernel_projection(disc.real_part(), 0.0, kernel_factor * disc.h)
    B = compress(disc.imag_part(), P.basis)
    mu = np.linalg.eigvalsh((B + B.conj().T) / 2)
    lead = np.sort(mu[np.argsort(-np.abs(mu), kind="stable")[:compare_count]])
    half = (compare_count + 1) // 2
    pred_ns = [n for k in range(1, half + 1) for n in (k, -k)][:compare_count]
    pred = np.array([1 / (2 * math.pi * n) for n in pred_ns])
    porder = np.argsort(pred)
    crow = []
    for k, idx in enumerate(porder):
        p, c = float(pred[idx]), float(lead[k])
        crow.append((pred_ns[idx], p, c, abs(c - p) / abs(p)))
    return VolterraReport(N, theta, tuple(rows), max_err, P.rank, tuple(crow),
                          max(r[3] for r in crow))


def volterra_refinement(Ns, theta: float, n_count: int = 5):
    """Max relative eigenvalue error per N, and whether it falls (10% slack) under refinement."""
    errs = [volterra_verify(N, theta, n_count).max_rel_error for N in Ns]
    monotone = all(b <= 1.1 * a for a, b in zip(errs, errs[1:]))
    return errs, monotone


def example62_models(n_max: int = 30, dim: int | None = None) -> tuple[SecularModel, SecularModel]:
    """The a- and b-models, optionally truncated to ``dim`` coordinates."""
    a, b = example62_weights("a", n_max), example62_weights("b", n_max)
    if dim is not None:
        a, b = a.truncate(dim), b.truncate(dim)
    return a, b


def example62_presets(dim: int = 400):
    return example62_family("a", dim), example62_family("b", dim)
