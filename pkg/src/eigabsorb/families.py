"""Analytic operator families and their essential-spectrum data.

Two representations:

* :class:`PolynomialFamily`: dense ``A(t) = sum_k t^k A_k``.
* :class:`StructuredFamily`: ``diag(d) + t diag(e) + sum sign c(t) a a*``
  where ``d`` and ``e`` come from closed-form rules (:class:`DiagonalTail`)
  with declared limit points.  The paired limit points of ``(d_k, e_k)``
  stand in for the essential numerical range of the untruncated operator;
  rank-one terms are compact and never move them.

Family documents (JSON) are read by :func:`parse_family` and written by
:func:`serialize_family`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .linalg import HermitianMatrix, PreconditionError, hermitian


class ModelError(ValueError):
    pass


class FamilyParseError(ValueError):
    def __init__(self, path, message):
        where = "/".join(str(p) for p in path) or "<root>"
        super().__init__(f"{where}: {message}")
        self.path = tuple(path)


RULES = ("exp_neg_k", "recip_k", "geometric", "constant", "linear", "list", "interleave")


@dataclass(frozen=True)
class DiagonalTail:
    """Closed-form rule ``k -> d_k`` (k = 1, 2, ...) with declared limits.

    rule          value of d_k (before ``head`` overrides)
    exp_neg_k     scale * e^{-k} + offset
    recip_k       scale / k + offset
    geometric     scale * ratio^k + offset
    constant      offset
    linear        scale * k + offset          (unbounded)
    list          values[k-1]
    interleave    parts[(k-1) % P] at sub-index (k-1) // P + 1
    """

    rule: str
    limit_points: tuple = ()
    scale: float = 1.0
    ratio: float = 0.5
    offset: float = 0.0
    values: tuple = ()
    parts: tuple = ()
    head: tuple = ()

    def __post_init__(self):
        if self.rule not in RULES:
            raise ModelError(f"unknown diagonal rule {self.rule!r}")
        object.__setattr__(self, "limit_points", tuple(float(x) for x in self.limit_points))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        object.__setattr__(self, "head", tuple(float(x) for x in self.head))
        if self.rule == "interleave" and not self.parts:
            raise ModelError("interleave rule needs at least one part")

    def _raw(self, k: np.ndarray) -> np.ndarray:
        kf = k.astype(float)
        r = self.rule
        if r == "exp_neg_k":
            return self.scale * np.exp(-kf) + self.offset
        if r == "recip_k":
            return self.scale / kf + self.offset
        if r == "geometric":
            with np.errstate(over="ignore"):
                return self.scale * np.power(self.ratio, kf) + self.offset
        if r == "constant":
            return np.full(k.shape, self.offset)
        if r == "linear":
            return self.scale * kf + self.offset
        if r == "list":
            if k.size and k.max() > len(self.values):
                raise ModelError(
                    f"list rule has {len(self.values)} values, index {int(k.max())} requested")
            return np.asarray(self.values)[k - 1]
        P = len(self.parts)
        out = np.empty(k.shape)
        for p, part in enumerate(self.parts):
            sel = (k - 1) % P == p
            out[sel] = part._raw((k[sel] - 1) // P + 1)
        return out

    def values_upto(self, N: int, tol: Tolerances = DEFAULT):
        """(d_1..d_N, flushed indices); magnitudes below ``tol.underflow`` become 0."""
        k = np.arange(1, N + 1)
        d = self._raw(k)
        n_head = min(len(self.head), N)
        d[:n_head] = self.head[:n_head]
        tiny = (np.abs(d) < tol.underflow) & (d != 0)
        d[tiny] = 0.0
        if not np.all(np.isfinite(d)):
            bad = int(np.flatnonzero(~np.isfinite(d))[0]) + 1
            raise ModelError(f"diagonal entry {bad} is not finite")
        return d, tuple(int(i) + 1 for i in np.flatnonzero(tiny))

    def analytic_limits(self):
        """Finite limit set of the rule, or None when only numerics can tell (list).

        Unbounded subsequences show up as +inf / -inf.
        """
        r = self.rule
        if r in ("exp_neg_k", "recip_k", "constant"):
            return {self.offset}
        if r == "geometric":
            q = self.ratio
            if abs(q) < 1:
                return {self.offset}
            if q == 1:
                return {self.scale + self.offset}
            if q == -1:
                return {self.offset + self.scale, self.offset - self.scale}
            return {math.inf, -math.inf} if q < 0 else {math.copysign(math.inf, self.scale)}
        if r == "linear":
            return {math.copysign(math.inf, self.scale)} if self.scale else {self.offset}
        if r == "list":
            return None
        out = set()
        for part in self.parts:
            lim = part.analytic_limits()
            if lim is None:
                return None
            out |= lim
        return out

    @property
    def unbounded(self) -> bool:
        lim = self.analytic_limits()
        return bool(lim) and any(math.isinf(x) for x in lim)

    def labels(self, k: np.ndarray) -> np.ndarray:
        """Limit point approached along the subsequence through each index k."""
        k = np.asarray(k)
        r = self.rule
        if r == "interleave":
            P = len(self.parts)
            out = np.empty(k.shape)
            for p, part in enumerate(self.parts):
                sel = (k - 1) % P == p
                out[sel] = part.labels((k[sel] - 1) // P + 1)
            return out
        if r == "geometric" and self.ratio == -1:
            return self.offset + self.scale * np.where(k % 2 == 0, 1.0, -1.0)
        if r == "geometric" and abs(self.ratio) > 1 and self.ratio < 0:
            return np.where(k % 2 == 0, 1.0, -1.0) * math.copysign(math.inf, self.scale)
        lim = self.analytic_limits()
        if lim is not None:
            return np.full(k.shape, next(iter(lim)))
        return np.asarray([self._nearest(v) for v in self._raw(k)])

    def _nearest(self, v):
        if not self.limit_points:
            return math.nan
        pts = np.asarray(self.limit_points)
        return float(pts[np.argmin(np.abs(pts - v))])

    def snap(self, label: float) -> float:
        """Map an analytic limit to the declared limit point it corresponds to."""
        if math.isinf(label) or math.isnan(label) or not self.limit_points:
            return label
        return self._nearest(label)

    def validate(self, N: int, tol: Tolerances = DEFAULT):
        """Check declared limit points against the rule (analytic or numeric)."""
        lim = self.analytic_limits()
        declared = self.limit_points
        if lim is not None:
            finite = {x for x in lim if not math.isinf(x)}
            for x in declared:
                if not any(abs(x - y) <= tol.tail for y in finite):
                    raise ModelError(f"declared limit point {x!r} is not a limit of rule {self.rule!r}")
            for y in finite:
                if not any(abs(x - y) <= tol.tail for x in declared):
                    raise ModelError(f"limit point {y!r} of rule {self.rule!r} is not declared")
            return
        d, _ = self.values_upto(N, tol)
        if not declared:
            raise ModelError("list rule needs declared limit points")
        pts = np.asarray(declared)
        for x in pts:
            if not np.any(np.abs(d - x) <= tol.tail):
                raise ModelError(f"declared limit point {x!r} is not approached by any index <= {N}")
        n0 = N // 2
        dist = np.min(np.abs(d[n0:, None] - pts[None, :]), axis=1)
        bad = np.flatnonzero(dist > tol.tail)
        if bad.size:
            k = int(bad[0]) + n0 + 1
            raise ModelError(f"tail entry d_{k}={d[k - 1]!r} is not within {tol.tail} of a limit point")


ZERO_TAIL = DiagonalTail("constant", (0.0,))


def _poly(coeffs, t):
    v = 0.0
    for c in reversed(coeffs):
        v = v * t + c
    return v


def _poly_deriv(coeffs):
    return tuple(k * c for k, c in enumerate(coeffs))[1:] or (0.0,)


@dataclass(frozen=True, eq=False)
class RankOneTerm:
    """``sign * c(t) * a a*`` with ``c`` given by polynomial coefficients."""

    vector: np.ndarray
    coupling: tuple = (0.0, 1.0)
    sign: int = -1

    def __post_init__(self):
        a = np.asarray(self.vector, dtype=complex).ravel()
        if not np.all(np.isfinite(a)):
            raise ModelError("rank-one vector has non-finite entries")
        if self.sign not in (1, -1):
            raise ModelError(f"sign must be +1 or -1, got {self.sign!r}")
        a.setflags(write=False)
        object.__setattr__(self, "vector", a)
        object.__setattr__(self, "coupling", tuple(float(c) for c in self.coupling))

    def c(self, t: float) -> float:
        return _poly(self.coupling, t)

    def c_prime(self, t: float) -> float:
        return _poly(_poly_deriv(self.coupling), t)

    def outer(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


@dataclass(frozen=True)
class EssentialData:
    """Paired limit points ``(x_j, y_j)`` plus recession directions of unbounded tails."""

    points: tuple
    recession: tuple = ()

    def __post_init__(self):
        pts = tuple(sorted({(float(x), float(y)) for x, y in self.points}))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "recession", tuple(sorted(set(self.recession))))
        if not pts:
            raise ModelError("essential data has no finite limit points")

    def sigma(self, t: float) -> float:
        """``min(x + t y)`` over the hull: the bottom of the essential spectrum of A0 + t A1."""
        if any(dx < 0 for dx, _ in self.recession) or (
                any(dy < 0 for dx, dy in self.recession if dx == 0) and t > 0) or (
                any(dy > 0 for dx, dy in self.recession if dx == 0) and t < 0):
            return -math.inf
        return min(x + t * y for x, y in self.points)

    def scaled(self, c: complex) -> "EssentialData":
        pts = [complex(x, y) * c for x, y in self.points]
        return EssentialData(tuple((p.real, p.imag) for p in pts))


@dataclass(frozen=True, eq=False)
class PolynomialFamily:
    coefficients: tuple
    radius: float | None = None

    def __post_init__(self):
        coeffs = tuple(hermitian(A) for A in self.coefficients)
        if not coeffs:
            raise ModelError("a polynomial family needs at least A0")
        dims = {A.dim for A in coeffs}
        if len(dims) != 1:
            raise ModelError(f"coefficients have different dimensions {sorted(dims)}")
        if self.radius is not None and not self.radius > 0:
            raise ModelError("radius must be positive")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dim(self) -> int:
        return self.coefficients[0].dim

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def _check(self, t):
        if self.radius is not None and not abs(t) < self.radius:
            raise PreconditionError(f"t={t!r} outside the validity radius {self.radius!r}")

    def evaluate(self, t: float) -> HermitianMatrix:
        self._check(t)
        M = np.zeros((self.dim, self.dim), dtype=complex)
        for A in reversed(self.coefficients):
            M = M * t + A.data
        return HermitianMatrix.from_array(M)

    def derivative(self, t: float) -> HermitianMatrix:
        self._check(t)
        M = np.zeros((self.dim, self.dim), dtype=complex)
        for k in range(self.degree, 0, -1):
            M = M * t + k * self.coefficients[k].data
        return HermitianMatrix.from_array(M)

    def a1(self) -> HermitianMatrix:
        if self.degree < 1:
            raise ModelError("no first-order term: family has degree 0")
        return self.coefficients[1]

    def __add__(self, other: "PolynomialFamily") -> "PolynomialFamily":
        n = max(len(self.coefficients), len(other.coefficients))
        zero = np.zeros((self.dim, self.dim))
        get = lambda f, k: f.coefficients[k].data if k < len(f.coefficients) else zero
        return PolynomialFamily(tuple(get(self, k) + get(other, k) for k in range(n)))


@dataclass(frozen=True, eq=False)
class StructuredFamily:
    dim: int
    diagonal: DiagonalTail
    a1_diagonal: DiagonalTail | None = None
    rank_one: tuple = ()
    name: str | None = None
    flushed: tuple = field(default=(), init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ModelError("dimension must be positive")
        terms = tuple(self.rank_one)
        for i, term in enumerate(terms):
            if term.vector.size != self.dim:
                raise ModelError(f"rank_one[{i}] vector has length {term.vector.size}, expected {self.dim}")
        object.__setattr__(self, "rank_one", terms)
        d, fl_d = self.diagonal.values_upto(self.dim)
        e_tail = self.a1_diagonal or ZERO_TAIL
        e, fl_e = e_tail.values_upto(self.dim)
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "flushed", tuple(sorted(set(fl_d) | set(fl_e))))

    radius = None

    def evaluate(self, t: float) -> HermitianMatrix:
        M = np.diag((self.d + t * self.e).astype(complex))
        for term in self.rank_one:
            M = M + term.sign * term.c(t) * term.outer()
        return HermitianMatrix.from_array(M)

    def derivative(self, t: float) -> HermitianMatrix:
        M = np.diag(self.e.astype(complex))
        for term in self.rank_one:
            M = M + term.sign * term.c_prime(t) * term.outer()
        return HermitianMatrix.from_array(M)

    def a1(self) -> HermitianMatrix:
        linear = any(term.c_prime(0.0) != 0 for term in self.rank_one)
        if not linear and not np.any(self.e):
            raise ModelError("no first-order term: diagonal slope is zero and no coupling is linear in t")
        return self.derivative(0.0)

    def validate(self, tol: Tolerances = DEFAULT):
        self.diagonal.validate(self.dim, tol)
        (self.a1_diagonal or ZERO_TAIL).validate(self.dim, tol)

    def essential_points(self, tol: Tolerances = DEFAULT) -> EssentialData:
        self.validate(tol)
        e_tail = self.a1_diagonal or ZERO_TAIL
        k = np.arange(self.dim // 2 + 1, self.dim + 1)
        ld = [self.diagonal.snap(x) for x in self.diagonal.labels(k)]
        le = [e_tail.snap(y) for y in e_tail.labels(k)]
        points, rec = set(), set()
        for x, y in zip(ld, le):
            if math.isnan(x) or math.isnan(y):
                continue
            if math.isinf(x) or math.isinf(y):
                dx = 0.0 if not math.isinf(x) else math.copysign(1.0, x)
                dy = 0.0 if not math.isinf(y) else math.copysign(1.0, y)
                if dx:
                    rec.add((dx, 0.0))
                if dy:
                    rec.add((0.0, dy))
            else:
                points.add((x, y))
        if not points:
            raise ModelError(f"no finite limit points in the tail k > {self.dim // 2}: "
                             "the essential numerical range is empty")
        return EssentialData(tuple(points), tuple(rec))

    def sigma(self, t: float) -> float:
        return self.essential_points().sigma(t)

    def secular_form(self, t: float):
        """(d + t e, |a|^2, c(t)) when A(t) = diag - c(t) a a* with c(t) > 0, else None."""
        if len(self.rank_one) != 1:
            return None
        term = self.rank_one[0]
        c = term.sign * term.c(t)
        if not c < 0:
            return None
        return self.d + t * self.e, np.abs(term.vector) ** 2, -c


def evaluate(family, t: float) -> HermitianMatrix:
    return family.evaluate(t)


def family_a1(family) -> HermitianMatrix:
    return family.a1()


def essential_points(family: StructuredFamily, tol: Tolerances = DEFAULT) -> EssentialData:
    return family.essential_points(tol)


# --- presets --------------------------------------------------------------

def example62_family(kind: str = "a", dim: int = 400) -> StructuredFamily:
    """``H - t K`` on the first ``dim`` coordinates, ``K = a a*`` (or ``b b*``)."""
    from .secular import example62_weights

    n_max = 1
    while (4 * n_max + 2) ** 2 < dim:
        n_max += 1
    model = example62_weights(kind, n_max).truncate(dim)
    tail = DiagonalTail("exp_neg_k", (0.0,), head=(0.0,))
    return StructuredFamily(dim, tail, None, (RankOneTerm(model.vector(), (0.0, 1.0), -1),),
                            name=f"example62{kind}")


def volterra_family(dim: int = 256, degree: int = 16) -> PolynomialFamily:
    """Taylor polynomial in theta of ``cos(theta) Re V_N + sin(theta) Im V_N``."""
    from .casebook import volterra_matrix

    V = volterra_matrix(dim).matrix
    re, im = (V + V.T) / 2, (V - V.T) / 2j
    coeffs = []
    for k in range(degree + 1):
        c = [1, 0, -1, 0][k % 4] / math.factorial(k)
        s = [0, 1, 0, -1][k % 4] / math.factorial(k)
        coeffs.append(c * re + s * im)
    return PolynomialFamily(tuple(coeffs), radius=1.0)


PRESETS = {
    "example62a": lambda dim=None: example62_family("a", dim or 400),
    "example62b": lambda dim=None: example62_family("b", dim or 400),
    "volterra": lambda dim=None: volterra_family(dim or 256),
}


def preset(name: str, dim: int | None = None):
    try:
        return PRESETS[name](dim)
    except KeyError:
        raise FamilyParseError(("preset",), f"unknown preset {name!r}") from None


# --- documents ------------------------------------------------------------

_NUM = {"type": "number"}
_CPLX = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_ENTRY = {"oneOf": [_NUM, _CPLX]}

_TAIL = {
    "type": "object",
    "properties": {
        "rule": {"enum": list(RULES)},
        "limit_points": {"type": "array", "items": _NUM},
        "scale": _NUM, "ratio": _NUM, "offset": _NUM, "value": _NUM,
        "values": {"type": "array", "items": _NUM},
        "head": {"type": "array", "items": _NUM},
        "parts": {"type": "array", "items": {"$ref": "#/$defs/tail"}, "minItems": 1},
    },
    "required": ["rule"],
    "additionalProperties": False,
}

SCHEMA = {
    "$defs": {"tail": _TAIL},
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "polynomial"},
                "dim": {"type": "integer", "minimum": 1},
                "coefficients": {"type": "array", "minItems": 1,
                                 "items": {"type": "array", "items": _ENTRY}},
                "radius": {"oneOf": [_NUM, {"const": "unbounded"}]},
            },
            "required": ["type", "dim", "coefficients"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "structured"},
                "dim": {"type": "integer", "minimum": 1},
                "diagonal": {"$ref": "#/$defs/tail"},
                "a1_diagonal": {"$ref": "#/$defs/tail"},
                "rank_one": {"type": "array", "items": {
                    "type": "object",
                    "properties": {
                        "vector": {"type": "array", "items": _ENTRY},
                        "coupling": {"oneOf": [{"enum": ["t", "t^2"]},
                                               {"type": "array", "items": _NUM, "minItems": 1}]},
                        "sign": {"enum": [1, -1]},
                    },
                    "required": ["vector", "coupling", "sign"],
                    "additionalProperties": False,
                }},
                "name": {"type": "string"},
            },
            "required": ["type", "dim", "diagonal"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "preset"},
                "name": {"enum": sorted(PRESETS)},
                "dim": {"type": "integer", "minimum": 1},
            },
            "required": ["type", "name"],
            "additionalProperties": False,
        },
    ],
}

_COUPLINGS = {"t": (0.0, 1.0), "t^2": (0.0, 0.0, 1.0)}


def _validate(doc):
    import jsonschema

    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = list(validator.iter_errors(doc))
    if not errors:
        return
    # oneOf failures hide the useful message in the branch matching "type"
    err = errors[0]
    if err.context:
        kind = doc.get("type") if isinstance(doc, dict) else None
        branch = {"polynomial": 0, "structured": 1, "preset": 2}.get(kind)
        sub = [e for e in err.context if branch is None or e.schema_path[0] == branch]
        err = jsonschema.exceptions.best_match(sub or err.context)
    raise FamilyParseError(tuple(err.absolute_path), err.message)


def _complex(x):
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _tail_from(doc) -> DiagonalTail:
    kw = dict(rule=doc["rule"], limit_points=tuple(doc.get("limit_points", ())))
    for key in ("scale", "ratio", "offset"):
        if key in doc:
            kw[key] = float(doc[key])
    if "value" in doc:
        kw["offset"] = float(doc["value"])
    if "values" in doc:
        kw["values"] = tuple(doc["values"])
    if "head" in doc:
        kw["head"] = tuple(doc["head"])
    if "parts" in doc:
        kw["parts"] = tuple(_tail_from(p) for p in doc["parts"])
    return DiagonalTail(**kw)


def parse_family(doc, tol: Tolerances = DEFAULT):
    """Build a family from a document (dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise FamilyParseError((), f"invalid JSON: {exc}") from exc
    _validate(doc)
    kind = doc["type"]
    if kind == "preset":
        return preset(doc["name"], doc.get("dim"))
    n = doc["dim"]
    if kind == "polynomial":
        coeffs = []
        for i, flat in enumerate(doc["coefficients"]):
            if len(flat) != n * n:
                raise FamilyParseError(("coefficients", i),
                                       f"expected {n * n} entries, got {len(flat)}")
            A = np.array([_complex(x) for x in flat]).reshape(n, n)
            coeffs.append(HermitianMatrix.from_array(A, tol))
        radius = doc.get("radius", "unbounded")
        return PolynomialFamily(tuple(coeffs), None if radius == "unbounded" else float(radius))
    terms = []
    for i, r in enumerate(doc.get("rank_one", [])):
        if len(r["vector"]) != n:
            raise FamilyParseError(("rank_one", i, "vector"),
                                   f"expected {n} entries, got {len(r['vector'])}")
        coupling = r["coupling"]
        coupling = _COUPLINGS[coupling] if isinstance(coupling, str) else tuple(coupling)
        terms.append(RankOneTerm(np.array([_complex(x) for x in r["vector"]]), coupling, r["sign"]))
    fam = StructuredFamily(n, _tail_from(doc["diagonal"]),
                           _tail_from(doc["a1_diagonal"]) if "a1_diagonal" in doc else None,
                           tuple(terms), name=doc.get("name"))
    fam.validate(tol)
    return fam


def _entry_out(z):
    z = complex(z)
    return [z.real, z.imag]


def _tail_to(tail: DiagonalTail) -> dict:
    out = {"rule": tail.rule, "limit_points": list(tail.limit_points)}
    defaults = DiagonalTail("constant")
    for key in ("scale", "ratio", "offset"):
        if getattr(tail, key) != getattr(defaults, key):
            out[key] = getattr(tail, key)
    if tail.values:
        out["values"] = list(tail.values)
    if tail.head:
        out["head"] = list(tail.head)
    if tail.parts:
        out["parts"] = [_tail_to(p) for p in tail.parts]
    return out


def serialize_family(family) -> dict:
    if isinstance(family, PolynomialFamily):
        return {
            "type": "polynomial",
            "dim": family.dim,
            "coefficients": [[_entry_out(z) for z in A.data.ravel()] for A in family.coefficients],
            "radius": "unbounded" if family.radius is None else family.radius,
        }
    doc = {"type": "structured", "dim": family.dim, "diagonal": _tail_to(family.diagonal)}
    if family.a1_diagonal is not None:
        doc["a1_diagonal"] = _tail_to(family.a1_diagonal)
    doc["rank_one"] = [{"vector": [_entry_out(z) for z in term.vector],
                        "coupling": list(term.coupling), "sign": term.sign}
                       for term in family.rank_one]
    if family.name:
        doc["name"] = family.name
    return doc


def same_family(f, g) -> bool:
    """Field-by-field equality of two families."""
    if type(f) is not type(g):
        return False
    if isinstance(f, PolynomialFamily):
        return (f.radius == g.radius and len(f.coefficients) == len(g.coefficients)
                and all(np.array_equal(A.data, B.data) for A, B in zip(f.coefficients, g.coefficients)))
    return (f.dim == g.dim and f.diagonal == g.diagonal and f.a1_diagonal == g.a1_diagonal
            and len(f.rank_one) == len(g.rank_one)
            and all(np.array_equal(a.vector, b.vector) and a.coupling == b.coupling and a.sign == b.sign
                    for a, b in zip(f.rank_one, g.rank_one)))
