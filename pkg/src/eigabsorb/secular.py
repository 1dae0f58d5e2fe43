"""Minimal eigenvalue of diagonal-minus-rank-one matrices.

For ``M(t) = diag(d) - t a a*`` the eigenvalue below ``min(d)`` is the root
of ``f(lam) = sum_k w_k / (d_k - lam) = 1/t`` with ``w_k = |a_k|^2``.  ``f`` is
positive and strictly increasing on ``lam < min(d)``, so bracketing is easy
and the root is unique whenever ``min(d)`` carries positive weight.

The two weight sequences of the crossing example are built exactly (in
rationals) by :func:`example62_weights`; :func:`crossing_scan` and
:func:`crossing_locate` compare the two resulting secular functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import DEFAULT


class SecularError(ValueError):
    pass


class BracketError(SecularError):
    pass


@dataclass(frozen=True, eq=False)
class SecularModel:
    """Diagonal ``d`` (length N) and non-negative weights ``w`` (length N).

    Only indices with ``w > 0`` take part in ``f``; they are kept as a
    sparse support so long, mostly-empty weight vectors stay cheap.
    """

    d: np.ndarray
    w: np.ndarray
    exact_weights: dict = field(default_factory=dict)
    flushed: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if d.ndim != 1 or d.shape != w.shape or d.size == 0:
            raise SecularError(f"d and w must be matching 1-D arrays, got {d.shape}, {w.shape}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(w))):
            raise SecularError("model has non-finite entries")
        if np.any(w < 0):
            raise SecularError("weights must be non-negative")
        if not np.sum(w) > 0:
            raise SecularError("weights sum to zero")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "w", w)
        support = np.flatnonzero(w > 0)
        object.__setattr__(self, "support", support)

    @property
    def N(self) -> int:
        return self.d.size

    @property
    def dmin(self) -> float:
        return float(self.d.min())

    @property
    def pole_weight(self) -> float:
        return float(self.w[self.d == self.dmin].sum())

    @property
    def minimum_at_first(self) -> bool:
        return bool(self.d[0] == self.dmin)

    def vector(self) -> np.ndarray:
        return np.sqrt(self.w)

    def truncate(self, N: int) -> "SecularModel":
        if not 1 <= N <= self.N:
            raise SecularError(f"cannot truncate a length-{self.N} model to {N}")
        exact = {k: v for k, v in self.exact_weights.items() if k <= N}
        return SecularModel(self.d[:N], self.w[:N], exact,
                            tuple(k for k in self.flushed if k <= N))

    def scaled(self, s: float) -> "SecularModel":
        return SecularModel(self.d, self.w * s)

    def dense_matrix(self, t: float) -> np.ndarray:
        a = self.vector()
        return np.diag(self.d) - t * np.outer(a, a)


def f_eval(model: SecularModel, lam: float) -> float:
    """``sum_k w_k / (d_k - lam)``, compensated, in ascending index order."""
    if not lam < model.dmin:
        raise SecularError(f"lambda={lam!r} is not below min(d)={model.dmin!r}")
    s = model.support
    return math.fsum((model.w[s] / (model.d[s] - lam)).tolist())


def f_prime(model: SecularModel, lam: float) -> float:
    s = model.support
    return math.fsum((model.w[s] / (model.d[s] - lam) ** 2).tolist())


def _f_shift(model, gaps, s):
    # f at lam = dmin - s and d(1/f)/ds, from precomputed gaps d_k - dmin.
    # The derivative is formed as sum (r_k / f) / (den_k f) so that nothing
    # overflows when s is near the bottom of the double range.
    den = gaps + s
    r = model.w[model.support] / den
    f = math.fsum(r.tolist())
    dh = math.fsum(((r / f) / (den * f)).tolist())
    return f, dh


def lambda_min(model: SecularModel, t: float, rtol: float = 1e-3) -> float:
    """The unique ``lam < min(d)`` with ``f(lam) = 1/t``.

    Log-scale bisection on the distance ``s = min(d) - lam`` down to relative
    width ``rtol``, then Newton on ``1/f(s) - t`` (nearly linear near the pole)
    with bisection fallback whenever a step leaves the bracket.
    """
    if not t > 0:
        raise SecularError(f"coupling must be positive, got t={t!r}")
    w0 = model.pole_weight
    if w0 <= 0:
        raise BracketError("no weight at the minimal diagonal entry; the root may not exist")
    gaps = model.d[model.support] - model.dmin
    lo, hi = 0.5 * w0 * t, 2.0 * float(model.w.sum()) * t
    # h(s) = 1/f(s) - t is increasing in s; h(lo) < 0 < h(hi)
    f_lo, _ = _f_shift(model, gaps, lo)
    f_hi, _ = _f_shift(model, gaps, hi)
    if not (1.0 / f_lo < t < 1.0 / f_hi):
        raise BracketError(f"bracket construction failed: [{lo!r}, {hi!r}]")
    while hi - lo > rtol * lo:
        mid = math.sqrt(lo) * math.sqrt(hi) if hi > 4 * lo else 0.5 * (lo + hi)
        f, _ = _f_shift(model, gaps, mid)
        if 1.0 / f < t:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(100):
        f, dh = _f_shift(model, gaps, s)
        h = 1.0 / f - t
        if h < 0:
            lo = max(lo, s)
        elif h > 0:
            hi = min(hi, s)
        else:
            break
        step = h / dh
        s_new = s - step
        if not lo <= s_new <= hi:
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 2e-16 * s:
            s = s_new
            break
        s = s_new
    lam = model.dmin - s
    f = f_eval(model, lam)
    if abs(f - 1.0 / t) > 1e-12 / t:
        raise SecularError(f"root residual {abs(f - 1 / t):.3e} too large at t={t!r}")
    return lam


def eigenvector(model: SecularModel, t: float) -> np.ndarray:
    """Unit eigenvector of ``diag(d) - t a a*`` for :func:`lambda_min`."""
    lam = lambda_min(model, t)
    x = model.vector() / (model.d - lam)
    return x / np.linalg.norm(x)


def certified_negative_count(model: SecularModel, t: float) -> int:
    """Exact number of negative eigenvalues of ``diag(d) - t a a^T``.

    The matrix is taken exactly as defined by its floating-point factors
    (not by the rounded product ``t a_i a_j``).  Unweighted indices are
    decoupled diagonal entries; the weighted block is counted with exact
    rational arithmetic.
    """
    import sympy

    from .linalg import exact_inertia

    sup = model.support
    off = np.setdiff1d(np.arange(model.N), sup)
    count = int(np.sum(model.d[off] < 0))
    a = [sympy.Rational(float(x)) for x in model.vector()[sup]]
    D = sympy.diag(*[sympy.Rational(float(x)) for x in model.d[sup]])
    av = sympy.Matrix(a)
    M = D - sympy.Rational(float(t)) * av * av.T
    neg, _, _ = exact_inertia(M)
    return count + neg


def example62_weights(kind: str, n_max: int) -> SecularModel:
    """Diagonal ``d_1 = 0, d_k = e^{-k}`` with the ``a`` or ``b`` coupling weights.

    Weights are defined up to index ``(4 n_max + 2)^2``; exact rational
    values are kept in ``exact_weights`` (index -> Fraction).
    """
    if kind not in ("a", "b"):
        raise ValueError(f"kind must be 'a' or 'b', got {kind!r}")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    N = (4 * n_max + 2) ** 2
    exact = {1: Fraction(1)}
    if kind == "a":
        for n in range(1, n_max + 1):
            exact[(4 * n) ** 2] = Fraction(3, 4 ** n)
    else:
        exact[2] = Fraction(1, 2)
        for n in range(1, n_max + 1):
            exact[(4 * n + 2) ** 2] = Fraction(3, 2 * 4 ** n)
    d, flushed = exp_neg_diagonal(N)
    w = np.zeros(N)
    for k, v in exact.items():
        w[k - 1] = float(v)
    return SecularModel(d, w, exact, flushed)


def exp_neg_diagonal(N: int, underflow: float = DEFAULT.underflow):
    """``d_1 = 0, d_k = e^{-k}``; entries below ``underflow`` flushed to 0."""
    k = np.arange(1, N + 1, dtype=float)
    d = np.exp(-k)
    d[0] = 0.0
    small = (d < underflow) & (d > 0)
    d[small] = 0.0
    small |= (d == 0) & (k > 1)
    return d, tuple(int(i) + 1 for i in np.flatnonzero(small))


def tail_sum(model: SecularModel, start: int = 2) -> Fraction:
    """Exact sum of weights with index >= ``start``."""
    return sum((v for k, v in model.exact_weights.items() if k >= start), Fraction(0))


# --- crossing machinery ---------------------------------------------------

MAX_PROBE_M = 26


@dataclass(frozen=True)
class ScanRow:
    m: int
    lambda_probe: float
    f_a: float
    f_b: float
    sign: int
    bound_a_ok: bool
    bound_b_ok: bool


def probe_bounds(m: int):
    """Bounds on ``f_a, f_b`` at ``lam = -e^{-m^2}`` for odd m.

    Returns ``(kind_a, value_a, kind_b, value_b)`` where kind is "<" (upper
    bound) or ">" (lower bound).  For m = 4n+1 the a-bound is an upper bound
    and the b-bound a lower bound; for m = 4n+3 the roles swap.
    """
    scale = math.exp(m * m)
    eps = 2.0 ** -m
    if m % 4 == 1:
        n = (m - 1) // 4
        up_a = scale * (1 + eps + (1 - eps) / 4 ** n)
        lo_b = scale * (1 + (1 - eps) * 2 / 4 ** n)
        return "<", up_a, ">", lo_b
    n = (m - 3) // 4
    lo_a = scale * (1 + (1 - eps) / 4 ** n)
    up_b = scale * (1 + eps * (1 - 1 / (2 * 4 ** n)) + 1 / (2 * 4 ** n))
    return ">", lo_a, "<", up_b


def _check(kind, value, bound):
    return value < bound if kind == "<" else value > bound


def crossing_scan(model_a: SecularModel, model_b: SecularModel, m_values) -> list[ScanRow]:
    rows = []
    for m in m_values:
        m = int(m)
        if m < 5 or m % 2 == 0:
            raise ValueError(f"probe index m must be odd and >= 5, got {m}")
        if m > MAX_PROBE_M or math.exp(-m * m) < 1e-300:
            raise ValueError(f"probe m={m} is outside the representable range (m <= 26)")
        lam = -math.exp(-m * m)
        fa, fb = f_eval(model_a, lam), f_eval(model_b, lam)
        ka, ba, kb, bb = probe_bounds(m)
        rows.append(ScanRow(m, lam, fa, fb, int(np.sign(fa - fb)),
                            _check(ka, fa, ba), _check(kb, fb, bb)))
    return rows


@dataclass(frozen=True)
class Crossing:
    lambda_star: float
    t_star: float
    lambda_a: float
    lambda_b: float

    @property
    def mismatch(self) -> float:
        return abs(self.lambda_a - self.lambda_b)

    @property
    def consistent(self) -> bool:
        return self.mismatch <= 1e-10 * abs(self.lambda_star)


def crossing_locate(model_a: SecularModel, model_b: SecularModel, bracket,
                    rtol: float = 1e-13) -> Crossing:
    """Root of ``f_a - f_b`` inside a sign-changing bracket of negative lambdas."""
    lo, hi = sorted(float(x) for x in bracket)
    if not (hi < min(model_a.dmin, model_b.dmin)):
        raise BracketError(f"bracket {bracket!r} is not below the spectrum minimum")

    def g(lam):
        return f_eval(model_a, lam) - f_eval(model_b, lam)

    g_lo, g_hi = g(lo), g(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise BracketError(f"no sign change of f_a - f_b on [{lo!r}, {hi!r}]")
    for _ in range(400):
        if hi - lo <= rtol * abs(hi):
            break
        # geometric midpoint while the bracket spans orders of magnitude
        mid = -math.sqrt(-lo) * math.sqrt(-hi) if lo < 4 * hi else 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0:
            lo = hi = mid
            break
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    t = 1.0 / f_eval(model_a, lam)
    return Crossing(lam, t, lambda_min(model_a, t), lambda_min(model_b, t))
