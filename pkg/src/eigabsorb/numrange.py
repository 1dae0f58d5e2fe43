"""Numerical range geometry.

* :func:`numerical_range_boundary` samples the boundary of W(T) through its
  support function: the top eigenpair of ``Re(e^{-i theta} T)``.
* :class:`ConvexRegion` is the polygon (plus recession directions) modelling
  the essential numerical range of a structured family.
* :func:`cap_check` realizes points ``eps*u + (1-eps)*z`` as Rayleigh
  quotients of vectors close to a given ``x``, working in the 2-D span of
  ``x`` and a second vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .families import EssentialData, ModelError, StructuredFamily
from .linalg import (PreconditionError, as_complex_matrix, hermitian_eig, quad_form,
                     spectral_norm)


# --- boundary of W(T) -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class NumRangeBoundary:
    theta: np.ndarray
    support: np.ndarray
    points: np.ndarray
    dim: int
    scale: float

    def support_defect(self) -> float:
        """max |Re(e^{-i theta} p) - h(theta)| over samples."""
        proj = (np.exp(-1j * self.theta) * self.points).real
        return float(np.max(np.abs(proj - self.support)))

    def convexity_defect(self) -> float:
        """Largest violation of any sampled supporting half-plane by any boundary point."""
        proj = (np.exp(-1j * self.theta)[:, None] * self.points[None, :]).real
        return float(max(0.0, np.max(proj - self.support[:, None])))

    def rows(self):
        return [(th, h, p.real, p.imag) for th, h, p in zip(self.theta, self.support, self.points)]


BOUNDARY_HEADER = ("theta", "support_value", "re", "im")


def numerical_range_boundary(T, n_angles: int = 64, tol: Tolerances = DEFAULT) -> NumRangeBoundary:
    T = as_complex_matrix(T)
    if n_angles < 4:
        raise PreconditionError(f"need at least 4 angles, got {n_angles}")
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    support = np.empty(n_angles)
    points = np.empty(n_angles, dtype=complex)
    for k, th in enumerate(theta):
        R = np.exp(-1j * th) * T
        dec = hermitian_eig((R + R.conj().T) / 2, tol)
        support[k] = dec.values[-1]
        points[k] = quad_form(T, dec.vectors[:, -1])
    return NumRangeBoundary(theta, support, points, T.shape[0], spectral_norm(T))


# --- convex regions -------------------------------------------------------

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points, dedup: float = 1e-12) -> tuple:
    """Counter-clockwise hull vertices (Andrew's monotone chain).

    Degenerate input gives one vertex (a point) or two (a segment).
    """
    pts = sorted({(float(x), float(y)) for x, y in points})
    uniq = []
    for p in pts:
        if not any(abs(p[0] - q[0]) <= dedup and abs(p[1] - q[1]) <= dedup for q in uniq):
            uniq.append(p)
    if len(uniq) <= 2:
        return tuple(uniq)
    lower, upper = [], []
    for p in uniq:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(uniq):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return tuple(hull)


@dataclass(frozen=True)
class ConvexRegion:
    """Convex hull of ``vertices`` plus the cone spanned by ``recession``."""

    vertices: tuple
    recession: tuple = ()

    @classmethod
    def hull(cls, points, recession=()) -> "ConvexRegion":
        return cls(convex_hull(points), tuple(sorted(set(recession))))

    @property
    def contains_all_above(self) -> bool:
        return (0.0, 1.0) in self.recession

    @property
    def empty(self) -> bool:
        return not self.vertices

    def rotated(self, c: complex) -> "ConvexRegion":
        """The region multiplied by the complex unit ``c``."""
        rot = [complex(x, y) * c for x, y in self.vertices]
        rec = [complex(x, y) * c for x, y in self.recession]
        return ConvexRegion.hull([(z.real, z.imag) for z in rot],
                                 [(round(z.real, 15), round(z.imag, 15)) for z in rec])

    def min_x(self) -> float:
        if any(dx < 0 for dx, _ in self.recession):
            return -math.inf
        return min(x for x, _ in self.vertices)

    def rows(self):
        return list(self.vertices)


REGION_HEADER = ("re", "im")


def essential_region(data: EssentialData) -> ConvexRegion:
    if not data.points:
        raise PreconditionError("essential data has no points")
    return ConvexRegion.hull(data.points, data.recession)


def _clip(poly, sign: float, slack: float):
    """Clip a vertex cycle to the half-plane ``sign * x <= slack``."""
    if not poly:
        return []
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = sign * p[0] - slack, sign * q[0] - slack
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            s = fp / (fp - fq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    return out


def omega(region: ConvexRegion, slack: float = 1e-12):
    """Smallest y with (0, y) in the region; None when the region misses the axis."""
    if region.empty:
        return None
    rec = set(region.recession)
    poly = list(region.vertices)
    # a point p reaches the axis iff p.x can be cancelled by horizontal recession
    if (1.0, 0.0) not in rec:
        poly = _clip(poly, -1.0, slack)
    if (-1.0, 0.0) not in rec:
        poly = _clip(poly, 1.0, slack)
    if not poly:
        return None
    if (0.0, -1.0) in rec:
        return -math.inf
    return min(y for _, y in poly)


# --- Sigma(t)/t -----------------------------------------------------------

@dataclass(frozen=True)
class SigmaSlopeReport:
    pairs: tuple
    limit: float | None
    omega: float | None
    shift: float
    agree: bool
    status: str

    def rows(self):
        return list(self.pairs)


def sigma_slope_check(source, t_grid, tol: Tolerances = DEFAULT) -> SigmaSlopeReport:
    """Compare lim Sigma(t)/t with omega of the essential region.

    Sigma(t) = min over limit points of x + t y.  When Sigma(0) != 0 both
    sides are measured from Sigma(0), i.e. the data is shifted so that the
    bottom of the essential spectrum at t = 0 sits at 0.
    """
    data = source.essential_points(tol) if isinstance(source, StructuredFamily) else source
    t = np.asarray(sorted(float(x) for x in t_grid))
    if t.size == 0 or np.any(t <= 0):
        raise PreconditionError("t grid must be non-empty and positive")
    shift = data.sigma(0.0)
    if math.isinf(shift):
        raise PreconditionError("Sigma(0) is unbounded below")
    shifted = EssentialData(tuple((x - shift, y) for x, y in data.points), data.recession)
    w = omega(essential_region(shifted))
    q = np.array([(data.sigma(float(s)) - shift) / s for s in t])
    pairs = tuple(zip(t.tolist(), q.tolist()))
    if w is None:
        return SigmaSlopeReport(pairs, None, None, shift, False, "no omega")
    if np.all(q == q[0]):
        limit = float(q[0])
    else:
        k = min(4, t.size)
        c = np.polyfit(t[:k], q[:k], 1 if k > 1 else 0)
        limit = float(c[-1])
    agree = bool(abs(limit - w) <= tol.slope) if math.isfinite(w) else limit == w
    return SigmaSlopeReport(pairs, limit, w, shift, agree, "agree" if agree else "disagree")


# --- 2-D Rayleigh quotient construction -----------------------------------

_PAULI = (np.array([[0, 1], [1, 0]], dtype=complex),
          np.array([[0, -1j], [1j, 0]], dtype=complex),
          np.array([[1, 0], [0, -1]], dtype=complex))


def _bloch(alpha: complex, beta: complex) -> np.ndarray:
    """Bloch vector of the unit 2-vector (alpha, beta)."""
    off = 2 * beta * np.conj(alpha)
    return np.array([off.real, off.imag, abs(alpha) ** 2 - abs(beta) ** 2])


def _complement(x: np.ndarray, v: np.ndarray) -> np.ndarray | None:
    r = v - np.vdot(x, v) * x
    nr = np.linalg.norm(r)
    if nr > 1e-8:
        return r / nr
    if x.size == 1:
        return None
    # v is (nearly) parallel to x: any direction orthogonal to x will do
    Q, _ = np.linalg.qr(np.column_stack([x, np.eye(x.size, dtype=complex)]))
    return Q[:, 1]


def blend_vector(T, x, v, eps: float):
    """Unit y in span{x, v} with <Ty,y> = eps <Tv,v> + (1-eps) <Tx,x> and |<x,y>|^2 >= 1-eps.

    The Rayleigh quotient on the 2-D span is affine in the Bloch vector r of
    y, so the preimage of the target is a line or plane through the known
    point ``eps r_v + (1-eps) e3`` inside the unit ball.  The point of that
    set on the sphere with the largest third component is returned.
    """
    T = np.asarray(T, dtype=complex)
    x = np.asarray(x, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    xp = _complement(x, v)
    if xp is None:
        return x.copy()
    B = np.column_stack([x, xp])
    T2 = B.conj().T @ T @ B
    coords = B.conj().T @ v
    coords = coords / np.linalg.norm(coords)
    p0 = eps * _bloch(coords[0], coords[1]) + (1 - eps) * np.array([0.0, 0.0, 1.0])
    g = np.array([np.trace(T2 @ s) / 2 for s in _PAULI])
    G = np.vstack([g.real, g.imag])
    _, sv, Vt = np.linalg.svd(G)
    rank = int(np.sum(sv > 1e-13 * max(1.0, sv[0] if sv.size else 0.0)))
    N = Vt[rank:].T
    center = p0 - N @ (N.T @ p0)
    rho = math.sqrt(max(0.0, 1.0 - float(center @ center)))
    up = N @ N[2]
    nu = np.linalg.norm(up)
    r = center + rho * up / nu if nu > 1e-15 else (center + rho * N[:, 0] if N.shape[1] else p0)
    c2 = (1 + r[2]) / 2
    c = math.sqrt(max(c2, 0.0))
    if c < 1e-15:
        return xp.copy()
    y = c * x + complex(r[0], r[1]) / (2 * c) * xp
    return y / np.linalg.norm(y)


@dataclass(frozen=True, eq=False)
class CapReport:
    epsilon: float
    targets_checked: int
    max_defect: float
    min_overlap: float
    witnesses: tuple
    failed_targets: tuple
    threshold: float

    @property
    def passed(self) -> bool:
        return not self.failed_targets and self.max_defect <= self.threshold


def cap_check(T, x, epsilon: float, n_targets: int, rng: np.random.Generator,
              keep_witnesses: bool = False) -> CapReport:
    """Realize random points of eps*W(T) + (1-eps)*<Tx,x> by vectors near x."""
    T = as_complex_matrix(T)
    x = np.asarray(x, dtype=complex).ravel()
    if abs(np.linalg.norm(x) - 1) > 1e-10:
        raise PreconditionError("x must be a unit vector")
    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    n = T.shape[0]
    scale = spectral_norm(T)
    threshold = 1e-8 * scale
    z = quad_form(T, x)
    worst, overlap, wit, failed = 0.0, 1.0, [], []
    for k in range(n_targets):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        target = epsilon * quad_form(T, v) + (1 - epsilon) * z
        y = blend_vector(T, x, v, epsilon)
        defect = abs(quad_form(T, y) - target)
        ov = abs(np.vdot(x, y)) ** 2
        worst, overlap = max(worst, defect), min(overlap, ov)
        if defect > threshold or ov < 1 - epsilon - 1e-10 or abs(np.linalg.norm(y) - 1) > 1e-12:
            failed.append(k)
        if keep_witnesses:
            wit.append(y)
    return CapReport(epsilon, n_targets, worst, overlap, tuple(wit), tuple(failed), threshold)


def convexity_defect(T, x1, x2, s: float) -> float:
    """|<Ty,y> - (s w1 + (1-s) w2)| for the y built in span{x1, x2}."""
    x1 = np.asarray(x1, dtype=complex).ravel()
    x1 = x1 / np.linalg.norm(x1)
    w1, w2 = quad_form(T, x1), quad_form(T, x2)
    y = blend_vector(T, x1, x2, 1 - s)
    return abs(quad_form(T, y) - (s * w1 + (1 - s) * w2))


# --- rays in the essential range -------------------------------------------

@dataclass(frozen=True)
class RayReport:
    status: str
    rows: tuple = field(default=())

    def errors_by_t(self):
        out = {}
        for t, N, err in self.rows:
            out.setdefault(t, []).append((N, err))
        return out

    @property
    def monotone(self) -> bool:
        """Errors are non-increasing in N for every t."""
        return all(all(b[1] <= a[1] + 1e-15 for a, b in zip(seq, seq[1:]))
                   for seq in self.errors_by_t().values())


RAY_HEADER = ("t", "N", "error")


def ray_check(family: StructuredFamily, w, direction, t_values, dims,
              tol: Tolerances = DEFAULT) -> RayReport:
    """Approach w + t*direction by Rayleigh-quotient pairs of tail-supported vectors.

    For each truncation size N the pair (<A0 y,y>, <A1 y,y>) of
    ``y = cos(phi) e_i + sin(phi) e_j`` is a convex combination of the
    diagonal pairs at i and j.  i is the tail index nearest to w, j the tail
    index furthest along the direction; phi is chosen optimally.
    """
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    try:
        data = family.essential_points(tol)
    except ModelError:
        return RayReport("empty essential range")
    if not any(np.allclose(direction, r) for r in data.recession):
        return RayReport("no unbounded direction declared")
    w = np.asarray(w, dtype=float)
    rows = []
    for N in sorted(dims):
        d, _ = family.diagonal.values_upto(N, tol)
        e = (family.a1_diagonal.values_upto(N, tol)[0] if family.a1_diagonal is not None
             else np.zeros(N))
        k0 = N // 2
        P = np.column_stack([d[k0:], e[k0:]])
        pi = P[np.argmin(np.linalg.norm(P - w, axis=1))]
        pj = P[np.argmax(P @ direction)]
        seg = pj - pi
        for t in t_values:
            target = w + t * direction
            L = float(seg @ seg)
            s = 0.0 if L == 0 else min(1.0, max(0.0, float((target - pi) @ seg) / L))
            rows.append((float(t), N, float(np.linalg.norm(pi + s * seg - target))))
    return RayReport("ok", tuple(rows))
