"""Eigenvalue branches of A(t) near the bottom of the essential spectrum.

The pipeline in :func:`verify_absorption`:

1. kernel projection P of A(t0) at the threshold level Sigma(t0);
2. predictor eigenvalues mu = spec(P A1 P) on ran P;
3. tracked branches lambda_j(t) for t > t0 and their threshold slopes
   beta_j = lim (lambda_j(t) - Sigma(t0)) / (t - t0);
4. sorted betas paired with the sorted mu below omega.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import DEFAULT, Tolerances
from .families import EssentialData, PolynomialFamily, StructuredFamily
from .linalg import (PreconditionError, compress, eigvalsh, hermitian, hermitian_eig,
                     quad_form)
from .numrange import essential_region, omega as omega_of
from .secular import BracketError, SecularModel, lambda_min


class InsufficientDataError(ValueError):
    pass


class NoKernelError(ValueError):
    pass


class IsolationError(ValueError):
    def __init__(self, gap, required):
        super().__init__(f"level is not isolated: gap {gap:.3e} < required {required:.3e}")
        self.gap = gap


class TrackingWarning(UserWarning):
    pass


# --- tracking -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """``values[b, i]`` is branch ``b`` at ``t_grid[i]``; sigma is NaN when unknown."""

    t_grid: np.ndarray
    values: np.ndarray
    below_sigma: np.ndarray
    sigma: np.ndarray
    scale: np.ndarray
    method: str = "dense"
    warnings: tuple = ()

    @property
    def n_branches(self) -> int:
        return self.values.shape[0]

    def branch(self, b: int) -> np.ndarray:
        return self.values[b]

    def rows(self):
        out = []
        for i, t in enumerate(self.t_grid):
            for b in range(self.n_branches):
                out.append((t, b, self.values[b, i], self.sigma[i], int(self.below_sigma[b, i])))
        return out


TRAJECTORY_HEADER = ("t", "branch_id", "lambda", "sigma", "below_sigma")


def _essential_of(family):
    if isinstance(family, StructuredFamily):
        return family.essential_points()
    return None


def _secular_models(family, t_grid):
    """Secular models per t when the bottom eigenvalue is a secular root, else None."""
    if not isinstance(family, StructuredFamily):
        return None
    out = []
    for t in t_grid:
        form = family.secular_form(float(t))
        if form is None:
            return None
        diag, w, c = form
        model = SecularModel(diag, w)
        if model.pole_weight <= 0:
            return None
        out.append((model, c))
    return out


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or not np.all(np.isfinite(t)):
        raise PreconditionError("t grid must be a non-empty 1-D list of finite values")
    if np.any(np.diff(t) <= 0):
        raise PreconditionError("t grid must be strictly increasing")
    return t


def track(family, t_grid, n_branches: int = 1, essential: EssentialData | None = None,
          tol: Tolerances = DEFAULT, use_secular: bool = True) -> TrajectorySet:
    """Bottom ``n_branches`` eigenvalues over the grid, matched across neighbouring t.

    Matching minimises total displacement from a linear extrapolation of
    each branch.  A single bottom branch of a ``diag - c(t) a a*`` family is
    computed from the secular equation instead of a dense eigensolve, which
    keeps relative accuracy when lambda is far below machine epsilon.
    """
    t = _check_grid(t_grid)
    dim = family.dim
    if not 1 <= n_branches <= dim:
        raise PreconditionError(f"n_branches must lie in [1, {dim}], got {n_branches}")
    if essential is None:
        essential = _essential_of(family)
    sigma = np.array([essential.sigma(float(s)) if essential else math.nan for s in t])

    models = _secular_models(family, t) if use_secular and n_branches == 1 else None
    notes = []
    if models is not None:
        try:
            vals = np.array([[lambda_min(m, c) for m, c in models]])
        except BracketError:
            models = None
    if models is not None:
        scale = np.array([max(abs(v), 1e-300) for v in vals[0]])
        below = vals < sigma[None, :]
        return TrajectorySet(t, vals, below, sigma, scale, "secular", ())

    raw = np.empty((t.size, n_branches))
    scale = np.empty(t.size)
    for i, s in enumerate(t):
        w = eigvalsh(family.evaluate(float(s)), tol)
        raw[i] = w[:n_branches]
        scale[i] = max(abs(w[0]), abs(w[-1]))
    vals = np.empty((n_branches, t.size))
    vals[:, 0] = raw[0]
    for i in range(1, t.size):
        if i >= 2:
            r = (t[i] - t[i - 1]) / (t[i - 1] - t[i - 2])
            pred = vals[:, i - 1] + r * (vals[:, i - 1] - vals[:, i - 2])
        else:
            pred = vals[:, i - 1]
        cost = np.abs(pred[:, None] - raw[i][None, :])
        rows, cols = linear_sum_assignment(cost)
        vals[rows, i] = raw[i][cols]
        best = cost[rows, cols].sum()
        for a in range(n_branches):
            for b in range(a + 1, n_branches):
                swapped = best - cost[a, cols[a]] - cost[b, cols[b]] + cost[a, cols[b]] + cost[b, cols[a]]
                if cols[a] != cols[b] and raw[i][cols[a]] != raw[i][cols[b]] and abs(swapped - best) <= 1e-12:
                    notes.append(f"ambiguous matching of branches {a},{b} at t={t[i]!r}")
    notes.extend(_jump_flags(t, vals, tol.eig * scale))
    band = tol.eig * scale
    below = vals < (sigma - band)[None, :]
    for msg in notes:
        warnings.warn(msg, TrackingWarning, stacklevel=2)
    return TrajectorySet(t, vals, below, sigma, scale, "dense", tuple(notes))


def _jump_flags(t, vals, floor):
    out = []
    if t.size < 3:
        return out
    dt = np.diff(t)
    slopes = np.diff(vals, axis=1) / dt
    for b in range(vals.shape[0]):
        for i in range(slopes.shape[1]):
            nb = [abs(slopes[b, j]) for j in (i - 1, i + 1) if 0 <= j < slopes.shape[1]]
            bound = 4 * max(nb) * dt[i]
            jump = abs(vals[b, i + 1] - vals[b, i])
            if jump > bound and jump > floor[i]:
                out.append(f"branch {b} jumps {jump:.3e} between t={t[i]!r} and t={t[i + 1]!r}"
                           f" (bound {bound:.3e})")
    return out


# --- kernel and predictor -------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelProjection:
    level: float
    tol_kernel: float
    basis: np.ndarray
    warnings: tuple = ()

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def _is_diagonal(M: np.ndarray) -> bool:
    return not np.any(M - np.diag(np.diag(M)))


def kernel_projection(A, level: float, tol_kernel: float,
                      tol: Tolerances = DEFAULT) -> KernelProjection:
    """Orthonormal basis of the eigenspace of A with ``|lambda - level| <= tol_kernel``."""
    if not tol_kernel > 0:
        raise PreconditionError("tol_kernel must be positive")
    H = hermitian(A, tol).data
    n = H.shape[0]
    if _is_diagonal(H):
        vals = np.diag(H).real
        idx = np.flatnonzero(np.abs(vals - level) <= tol_kernel)
        basis = np.eye(n, dtype=complex)[:, idx]
    else:
        dec = hermitian_eig(H, tol)
        vals = dec.values
        idx = np.flatnonzero(np.abs(vals - level) <= tol_kernel)
        basis = dec.vectors[:, idx]
    dist = np.abs(vals - level)
    near = dist[(dist > tol_kernel / 2) & (dist <= 2 * tol_kernel)]
    notes = tuple(f"eigenvalue at distance {g:.3e} from level is within a factor 2 of "
                  f"tol_kernel={tol_kernel:.3e}" for g in np.sort(near))
    for msg in notes:
        warnings.warn(msg, TrackingWarning, stacklevel=2)
    return KernelProjection(float(level), float(tol_kernel), basis, notes)


def b0_compression(P: KernelProjection, A1, tol: Tolerances = DEFAULT):
    """(P A1 P restricted to ran P, ascending eigenvalues mu).

    The eigenvalue 0 that B0 carries on the orthogonal complement of ran P
    is not included.
    """
    if P.rank == 0:
        raise NoKernelError("no kernel: the projection is empty")
    B = compress(hermitian(A1, tol).data, P.basis, tol)
    B = (B + B.conj().T) / 2
    return B, np.linalg.eigvalsh(B)


def isolated_branch_slopes(family: PolynomialFamily, level: float, tol: float,
                           tolerances: Tolerances = DEFAULT) -> np.ndarray:
    """Predicted derivatives at t=0 of the branches through an isolated level of A0."""
    dec = hermitian_eig(family.coefficients[0], tolerances)
    dist = np.abs(dec.values - level)
    inside = dist <= tol
    gap = float(dist[~inside].min()) if np.any(~inside) else math.inf
    if gap < 10 * tol:
        raise IsolationError(gap, 10 * tol)
    if not np.any(inside):
        return np.empty(0)
    A1 = family.coefficients[1].data if family.degree >= 1 else np.zeros((family.dim,) * 2)
    B = compress(A1, dec.vectors[:, inside], tolerances)
    return np.linalg.eigvalsh((B + B.conj().T) / 2)


# --- slopes ---------------------------------------------------------------

@dataclass(frozen=True)
class SlopeEstimate:
    beta: float
    uncertainty: float
    n_points: int
    slow: bool


def _fit(s, q):
    X = np.column_stack([np.ones_like(s), s])
    coef, *_ = np.linalg.lstsq(X, q, rcond=None)
    resid = q - X @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def slope_estimate(traj: TrajectorySet, branch_id: int, t0: float, sigma_t0: float,
                   window: int = 4) -> SlopeEstimate:
    """beta from a least-squares fit ``q(t) = beta + c (t - t0)`` on the smallest t.

    ``q = (lambda(t) - sigma_t0) / (t - t0)``.  Two windows (``window`` and
    ``2*window`` points) are fitted; if the second is available the two
    intercepts are combined by Richardson extrapolation, assuming an
    intercept error that scales with the square of the window span.
    """
    t = traj.t_grid
    keep = t > t0
    s = t[keep] - t0
    lam = traj.values[branch_id][keep]
    if s.size < max(window, 4):
        raise InsufficientDataError(
            f"need at least {max(window, 4)} grid points with t > t0, got {s.size}")
    q = (lam - sigma_t0) / s
    w = max(window, 4)
    b1, c1, r1 = _fit(s[:w], q[:w])
    if s.size >= 2 * w:
        b2, _, _ = _fit(s[:2 * w], q[:2 * w])
        rho = (s[2 * w - 1] / s[w - 1]) ** 2
        beta = (rho * b1 - b2) / (rho - 1)
        unc = r1 + abs(b1 - b2)
    else:
        beta = b1
        unc = r1 + abs(c1) * s[0]
    scale = max(1.0, abs(beta))
    return SlopeEstimate(float(beta), float(unc), int(s.size), bool(unc > 1e-3 * scale))


# --- absorption -----------------------------------------------------------

@dataclass(frozen=True)
class AbsorptionOptions:
    t_grid: tuple = tuple(np.geomspace(1e-6, 1e-4, 16))
    n_branches: int | None = None
    tol_kernel: float | None = None
    level: float | None = None
    essential: EssentialData | None = None
    window: int = 4


@dataclass(frozen=True, eq=False)
class AbsorptionReport:
    t0: float
    sigma_t0: float
    omega: float
    tol_kernel: float
    kernel_rank: int
    mu: np.ndarray
    slopes: tuple
    matched_pairs: tuple
    at_threshold: tuple
    verdict: str
    reason: str
    trajectory: TrajectorySet | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "no-absorption")

    def key_values(self):
        return [
            ("t0", self.t0), ("sigma_t0", self.sigma_t0), ("omega", self.omega),
            ("tol_kernel", self.tol_kernel), ("kernel_rank", self.kernel_rank),
            ("mu", " ".join(f"{m:.17g}" for m in self.mu)),
            ("absorbed_branches", len(self.slopes)),
            ("betas", " ".join(f"{b:.17g}" for _, b, _ in self.slopes)),
            ("at_threshold", len(self.at_threshold)),
            ("verdict", self.verdict), ("reason", self.reason),
        ]

    def rows(self):
        out = []
        for (bid, beta, unc), (_, mu, gap) in zip(self.slopes, self.matched_pairs):
            out.append((bid, beta, unc, mu, gap))
        for bid, beta, unc in self.slopes[len(self.matched_pairs):]:
            out.append((bid, beta, unc, math.nan, math.nan))
        return out


ABSORPTION_HEADER = ("branch_id", "beta", "uncertainty", "mu", "gap")


def _default_tol_kernel(A, level, structured, tol):
    H = A.data
    norm = max(abs(v) for v in (eigvalsh(H, tol)[[0, -1]]))
    base = tol.kernel * max(norm, np.finfo(float).tiny)
    if not structured:
        return base
    vals = np.diag(H).real if _is_diagonal(H) else eigvalsh(H, tol)
    dist = np.abs(vals - level)
    dist = dist[dist > 0]
    return min(base, 0.25 * float(dist.min())) if dist.size else base


def verify_absorption(family, t0: float = 0.0,
                      options: AbsorptionOptions = AbsorptionOptions(),
                      tol: Tolerances = DEFAULT) -> AbsorptionReport:
    A0 = family.evaluate(t0)
    A1 = family.a1() if t0 == 0 else family.derivative(t0)
    structured = isinstance(family, StructuredFamily)
    data = options.essential if options.essential is not None else _essential_of(family)
    if data is not None:
        sigma0 = data.sigma(t0)
        moved = EssentialData(tuple((x + t0 * y - sigma0, y) for x, y in data.points),
                              data.recession)
        w = omega_of(essential_region(moved))
        w = math.inf if w is None else w
    else:
        if options.level is None:
            raise PreconditionError("a threshold level is required when no essential data is given")
        sigma0, w = float(options.level), math.inf
    if options.level is not None:
        sigma0 = float(options.level)

    tk = options.tol_kernel or _default_tol_kernel(A0, sigma0, structured, tol)
    P = kernel_projection(A0, sigma0, tk, tol)
    mu = b0_compression(P, A1, tol)[1] if P.rank else np.empty(0)
    vals0 = np.diag(A0.data).real if _is_diagonal(A0.data) else eigvalsh(A0, tol)
    m_neg = int(np.sum(vals0 < sigma0 - tk))

    n_br = options.n_branches or min(family.dim, m_neg + max(P.rank, 1))
    n_br = max(n_br, min(family.dim, m_neg + P.rank))
    t_grid = t0 + np.asarray(options.t_grid, dtype=float)
    traj = track(family, t_grid, n_br, essential=data, tol=tol)

    # branches leaving the kernel sit just above the m_neg lower ones at small t
    first = np.argsort(traj.values[:, 0], kind="stable")
    w_pts = options.window
    candidates = first[m_neg:m_neg + max(P.rank, 0)] if P.rank else first[m_neg:]
    if data is not None:
        absorbed = [b for b in candidates if np.all(traj.below_sigma[b, :w_pts])]
    else:
        absorbed = list(candidates)

    band = tol.threshold_band
    slopes = []
    for b in absorbed:
        est = slope_estimate(traj, int(b), t0, sigma0, w_pts)
        slopes.append((int(b), est.beta, est.uncertainty))
    slopes.sort(key=lambda r: r[1])
    mu_below = [m for m in mu if m < w - band]
    at_thr = tuple(float(m) for m in mu if abs(m - w) <= band)

    if P.rank == 0:
        bad = [s for s in slopes if s[1] < w - band]
        verdict = "theorem-violation" if bad else "no-absorption"
        reason = ("branch below sigma with an empty kernel" if bad
                  else "no kernel at the threshold and no branch below sigma")
        return AbsorptionReport(t0, sigma0, w, tk, 0, mu, tuple(slopes), (), at_thr,
                                verdict, reason, traj)

    pairs = tuple((b, float(m), abs(b - m)) for (_, b, _), m in zip(slopes, sorted(mu_below)))
    if len(slopes) != len(mu_below):
        verdict = "fail"
        reason = f"{len(slopes)} absorbed branches but {len(mu_below)} predictor eigenvalues below omega"
    else:
        ok = all(gap <= max(tol.match_floor, 10 * unc)
                 for (_, _, gap), (_, _, unc) in zip(pairs, slopes))
        verdict = "pass" if ok else "fail"
        reason = "slopes match predictor eigenvalues" if ok else "slope differs from predictor eigenvalue"
    return AbsorptionReport(t0, sigma0, w, tk, P.rank, mu, tuple(slopes), pairs, at_thr,
                            verdict, reason, traj)


def eigenvector_alignment(family, t: float, P: KernelProjection, branch: int = 0):
    """(||P x||, distance of P x / ||P x|| to the nearest unit eigenvector of P A1 P)."""
    dec = hermitian_eig(family.evaluate(t))
    x = dec.vectors[:, branch]
    c = P.basis.conj().T @ x
    norm = float(np.linalg.norm(c))
    B, mu = b0_compression(P, family.a1())
    _, U = np.linalg.eigh(B)
    c = c / norm
    dist = min(float(np.linalg.norm(c - np.vdot(U[:, k], c) / abs(np.vdot(U[:, k], c)) * U[:, k]))
               if abs(np.vdot(U[:, k], c)) > 0 else 2.0 for k in range(U.shape[1]))
    return norm, dist


# --- derivative check -----------------------------------------------------

@dataclass(frozen=True)
class DerivativeReport:
    status: str
    analytic: float
    finite_difference: tuple
    errors: tuple
    steps: tuple

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def derivative_check(family, t: float, branch_id: int = 0, h0: float = 1e-3,
                     n_halvings: int = 5, tol: Tolerances = DEFAULT) -> DerivativeReport:
    """Central differences of lambda_b against <A'(t) x, x>."""
    dec = hermitian_eig(family.evaluate(t), tol)
    scale = max(dec.scale, np.finfo(float).tiny)
    lam = dec.values
    nb = [abs(lam[branch_id] - lam[j]) for j in (branch_id - 1, branch_id + 1) if 0 <= j < lam.size]
    if nb and min(nb) < 1e-6 * scale:
        return DerivativeReport("crossing", math.nan, (), (), ())
    analytic = quad_form(family.derivative(t), dec.vectors[:, branch_id], real=True)
    steps, fds, errs = [], [], []
    for i in range(n_halvings + 1):
        h = h0 / 2 ** i
        up = eigvalsh(family.evaluate(t + h), tol)[branch_id]
        dn = eigvalsh(family.evaluate(t - h), tol)[branch_id]
        fd = (up - dn) / (2 * h)
        steps.append(h)
        fds.append(fd)
        errs.append(abs(fd - analytic))
    C = errs[0] / h0 ** 2
    ok = all(e <= 1.5 * C * h ** 2 + 1e-10 * scale for e, h in zip(errs, steps))
    return DerivativeReport("pass" if ok else "fail", analytic, tuple(fds), tuple(errs), tuple(steps))
