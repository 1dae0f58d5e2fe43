"""Dense complex linear algebra used by every other module.

Matrices are plain numpy arrays; :class:`HermitianMatrix` wraps one that has
been checked and symmetrized.  Eigendecompositions go through LAPACK (via
numpy) after splitting the matrix into its decoupled blocks, which keeps
isolated diagonal entries exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .config import DEFAULT, Tolerances


class PreconditionError(ValueError):
    pass


class NotHermitianError(ValueError):
    def __init__(self, defect, bound):
        super().__init__(
            f"matrix is not Hermitian: defect {defect:.3e} exceeds {bound:.3e}")
        self.defect = defect


class EigenSolverError(RuntimeError):
    pass


def as_complex_matrix(T, square: bool = True) -> np.ndarray:
    """Return ``T`` as a finite complex 2-D array (a copy is not forced)."""
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.size == 0:
        raise PreconditionError(f"expected a non-empty 2-D matrix, got shape {T.shape}")
    if square and T.shape[0] != T.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {T.shape}")
    if not np.all(np.isfinite(T)):
        raise PreconditionError("matrix has non-finite entries")
    return T


def from_row_major(entries, rows: int, cols: int) -> np.ndarray:
    entries = np.asarray(entries, dtype=complex)
    if entries.size != rows * cols:
        raise PreconditionError(
            f"{entries.size} entries do not fill a {rows}x{cols} matrix")
    return as_complex_matrix(entries.reshape(rows, cols), square=False)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """A Hermitian matrix; ``defect`` is the pre-symmetrization max |M - M*|."""

    data: np.ndarray
    defect: float = 0.0

    @classmethod
    def from_array(cls, M, tol: Tolerances = DEFAULT) -> "HermitianMatrix":
        M = as_complex_matrix(M)
        defect = float(np.max(np.abs(M - M.conj().T)))
        bound = tol.hermitian * float(np.max(np.abs(M)))
        if defect > bound:
            raise NotHermitianError(defect, bound)
        H = (M + M.conj().T) / 2
        H.setflags(write=False)
        return cls(H, defect)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.data, 2))

    def __add__(self, other):
        return HermitianMatrix.from_array(self.data + _data(other))

    def __sub__(self, other):
        return HermitianMatrix.from_array(self.data - _data(other))

    def __mul__(self, c):
        return HermitianMatrix.from_array(self.data * float(c))

    __rmul__ = __mul__

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def _data(M) -> np.ndarray:
    return M.data if isinstance(M, HermitianMatrix) else np.asarray(M, dtype=complex)


def hermitian(M, tol: Tolerances = DEFAULT) -> HermitianMatrix:
    if isinstance(M, HermitianMatrix):
        return M
    return HermitianMatrix.from_array(M, tol)


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray
    scale: float = field(default=0.0)

    def residual(self, M) -> float:
        """max_i ||M v_i - values_i v_i||."""
        M = _data(M)
        R = M @ self.vectors - self.vectors * self.values
        return float(np.max(np.linalg.norm(R, axis=0))) if R.size else 0.0

    def orthonormality_defect(self) -> float:
        G = self.vectors.conj().T @ self.vectors
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def clusters(self, tol: Tolerances = DEFAULT) -> list[np.ndarray]:
        """Index groups of eigenvalues within ``tol.cluster * scale`` of a neighbour."""
        gap = tol.cluster * max(self.scale, np.finfo(float).tiny)
        groups, start = [], 0
        for i in range(1, len(self.values) + 1):
            if i == len(self.values) or self.values[i] - self.values[i - 1] > gap:
                groups.append(np.arange(start, i))
                start = i
        return groups

    def projector(self, idx) -> np.ndarray:
        V = self.vectors[:, idx]
        return V @ V.conj().T


def block_components(M) -> list[np.ndarray]:
    """Index sets of the decoupled diagonal blocks of ``M``.

    Two indices are coupled when the corresponding off-diagonal entry is
    non-zero.  Blocks are ordered by their smallest index.
    """
    M = _data(M)
    n_comp, labels = connected_components(csr_matrix(M != 0), directed=False)
    comps = [np.flatnonzero(labels == c) for c in range(n_comp)]
    comps.sort(key=lambda c: c[0])
    return comps


def hermitian_eig(M, tol: Tolerances = DEFAULT, check: bool = False) -> EigenDecomposition:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    H = hermitian(M, tol).data
    n = H.shape[0]
    values = np.empty(n)
    vectors = np.zeros((n, n), dtype=complex)
    pos = 0
    for comp in block_components(H):
        k = len(comp)
        if k == 1:
            values[pos] = H[comp[0], comp[0]].real
            vectors[comp[0], pos] = 1.0
        else:
            try:
                w, U = np.linalg.eigh(H[np.ix_(comp, comp)])
            except np.linalg.LinAlgError as exc:
                raise EigenSolverError(
                    f"Hermitian eigensolver did not converge (dim {n}, block {k})") from exc
            values[pos:pos + k] = w
            vectors[comp, pos:pos + k] = U
        pos += k
    order = np.argsort(values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    scale = float(np.max(np.abs(values)))
    dec = EigenDecomposition(values, vectors, scale)
    if check:
        bound = tol.eig * max(scale, np.finfo(float).tiny)
        if dec.residual(H) > bound or dec.orthonormality_defect() > tol.eig:
            raise EigenSolverError(f"eigen-residual check failed (dim {n})")
    return dec


def eigvalsh(M, tol: Tolerances = DEFAULT) -> np.ndarray:
    H = hermitian(M, tol).data
    parts = []
    for comp in block_components(H):
        if len(comp) == 1:
            parts.append(np.array([H[comp[0], comp[0]].real]))
        else:
            try:
                parts.append(np.linalg.eigvalsh(H[np.ix_(comp, comp)]))
            except np.linalg.LinAlgError as exc:
                raise EigenSolverError(
                    f"Hermitian eigensolver did not converge (dim {H.shape[0]})") from exc
    return np.sort(np.concatenate(parts), kind="stable")


def as_basis(basis, dim: int | None = None, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Stack basis vectors as columns and check orthonormality."""
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        B = basis.astype(complex)
    else:
        vecs = [np.asarray(b, dtype=complex).ravel() for b in basis]
        if not vecs:
            raise PreconditionError("empty basis")
        if len({v.size for v in vecs}) != 1:
            raise PreconditionError("basis vectors have different lengths")
        B = np.column_stack(vecs)
    if dim is not None and B.shape[0] != dim:
        raise PreconditionError(f"basis vectors have length {B.shape[0]}, expected {dim}")
    defect = float(np.max(np.abs(B.conj().T @ B - np.eye(B.shape[1])))) if B.size else 0.0
    if defect > tol.gram:
        raise PreconditionError(f"basis is not orthonormal: max Gram defect {defect:.3e}")
    return B


def compress(T, basis, tol: Tolerances = DEFAULT) -> np.ndarray:
    """The k x k matrix with entries <T b_j, b_i>."""
    T = as_complex_matrix(_data(T))
    B = as_basis(basis, T.shape[0], tol)
    return B.conj().T @ T @ B


def quad_form(T, x, real: bool = False):
    """Rayleigh quotient <Tx, x> / <x, x>."""
    T = _data(T)
    x = np.asarray(x, dtype=complex).ravel()
    nx = np.vdot(x, x).real
    if nx == 0.0:
        raise PreconditionError("quadratic form of the zero vector")
    q = np.vdot(x, T @ x) / nx
    if real:
        bound = 1e-12 * float(np.linalg.norm(T))
        if abs(q.imag) > bound:
            raise NotHermitianError(abs(q.imag), bound)
        return float(q.real)
    return complex(q)


def spectral_norm(T) -> float:
    T = _data(T)
    return float(np.linalg.norm(T, 2)) if T.size else 0.0


def exact_inertia(M) -> tuple[int, int, int]:
    """Exact (negative, zero, positive) counts for a sympy Hermitian matrix.

    Descartes' rule of signs is exact for real-rooted polynomials, so counting
    sign changes of the exact characteristic polynomial gives the inertia.
    """
    import sympy

    coeffs = [sympy.re(sympy.expand(c)) for c in M.charpoly().all_coeffs()]
    zeros = 0
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
        zeros += 1

    def changes(cs):
        signs = [sympy.sign(c) for c in cs if c != 0]
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    deg = len(coeffs) - 1
    flipped = [c * (-1) ** (deg - i) for i, c in enumerate(coeffs)]
    return changes(flipped), zeros, changes(coeffs)


def to_exact(x):
    """Exact sympy value(s) of binary floating-point input."""
    import sympy

    def one(z):
        z = complex(z)
        return sympy.Rational(z.real) + sympy.I * sympy.Rational(z.imag)

    a = np.asarray(x)
    if a.ndim == 0:
        return one(a)
    if a.ndim == 1:
        return sympy.Matrix([one(z) for z in a])
    return sympy.Matrix(a.shape[0], a.shape[1], lambda i, j: one(a[i, j]))


def inertia(M, tol: Tolerances = DEFAULT, max_exact_block: int = 48) -> tuple[int, int, int]:
    """(negative, zero, positive) eigenvalue counts of a Hermitian matrix.

    Eigenvalues whose computed magnitude is below the residual bound
    ``tol.eig * ||M||`` have undetermined sign in double precision; the
    decoupled block holding them is re-counted exactly.
    """
    H = hermitian(M, tol).data
    scale = float(np.max(np.abs(eigvalsh(H, tol)))) if H.size else 0.0
    band = tol.eig * scale
    neg = zero = pos = 0
    for comp in block_components(H):
        blk = H[np.ix_(comp, comp)]
        w = np.linalg.eigvalsh(blk) if len(comp) > 1 else np.array([blk[0, 0].real])
        if len(comp) > 1 and np.any(np.abs(w) <= band):
            if len(comp) > max_exact_block:
                raise EigenSolverError(
                    f"cannot certify eigenvalue signs in a block of size {len(comp)}")
            n_, z_, p_ = exact_inertia(to_exact(blk))
        else:
            n_, z_, p_ = int(np.sum(w < 0)), int(np.sum(w == 0)), int(np.sum(w > 0))
        neg, zero, pos = neg + n_, zero + z_, pos + p_
    return neg, zero, pos
