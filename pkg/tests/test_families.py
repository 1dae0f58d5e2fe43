import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eigabsorb.families import (DiagonalTail, EssentialData, FamilyParseError, ModelError,
                                PolynomialFamily, RankOneTerm, StructuredFamily,
                                example62_family, parse_family, same_family, serialize_family)
from eigabsorb.linalg import NotHermitianError, PreconditionError, eigvalsh
from eigabsorb.secular import example62_weights, lambda_min

from .conftest import random_hermitian

EXP_TAIL = DiagonalTail("exp_neg_k", (0.0,), head=(0.0,))


def test_constant_polynomial_family():
    f = PolynomialFamily((np.diag([1.0, 2.0]),))
    assert np.array_equal(f.evaluate(5.0).data, np.diag([1.0, 2.0]))


def test_radius_enforced():
    f = PolynomialFamily((np.eye(2), np.eye(2)), radius=1.0)
    with pytest.raises(PreconditionError, match="radius"):
        f.evaluate(1.0)


def test_structured_direct_construction():
    N = 6
    f = StructuredFamily(N, EXP_TAIL, rank_one=(RankOneTerm(np.eye(N)[0]),))
    d = np.r_[0.0, np.exp(-np.arange(2, N + 1))]
    expected = np.diag(d) - 0.3 * np.outer(np.eye(N)[0], np.eye(N)[0])
    assert np.allclose(f.evaluate(0.3).data, expected, atol=0, rtol=1e-15)


def test_example62_matches_secular_root():
    f = example62_family("a", 40)
    dense = eigvalsh(f.evaluate(0.1))[0]
    model = example62_weights("a", 2).truncate(40)
    assert abs(dense - lambda_min(model, 0.1)) <= 1e-10 * abs(dense)


def test_essential_points_examples():
    assert example62_family("a", 100).essential_points().points == ((0.0, 0.0),)
    f = StructuredFamily(50, DiagonalTail("recip_k", (0.0,)),
                         DiagonalTail("constant", (1.0,), offset=1.0))
    assert f.essential_points().points == ((0.0, 1.0),)
    alt = DiagonalTail("interleave", (0.0, 1.0),
                       parts=(DiagonalTail("geometric", (0.0,), ratio=0.5),
                              DiagonalTail("recip_k", (1.0,), offset=1.0)))
    f = StructuredFamily(60, alt)
    assert f.essential_points().points == ((0.0, 0.0), (1.0, 0.0))


def test_essential_points_ignore_rank_one(rng):
    base = StructuredFamily(30, DiagonalTail("recip_k", (0.0,)))
    term = RankOneTerm(rng.standard_normal(30) + 1j * rng.standard_normal(30), (0.0, 1.0, 2.0), 1)
    with_term = StructuredFamily(30, DiagonalTail("recip_k", (0.0,)), rank_one=(term,))
    assert base.essential_points() == with_term.essential_points()


def test_undeclared_limit_rejected():
    with pytest.raises(ModelError, match="not declared"):
        StructuredFamily(20, DiagonalTail("recip_k", ())).essential_points()
    with pytest.raises(ModelError, match="not a limit"):
        StructuredFamily(20, DiagonalTail("recip_k", (0.0, 3.0))).essential_points()


def test_list_rule_names_offending_index():
    vals = [0.0] * 10 + [0.5] + [0.0] * 9
    f = StructuredFamily(20, DiagonalTail("list", (0.0,), values=vals))
    with pytest.raises(ModelError, match="d_11"):
        f.essential_points()


def test_unbounded_tail_gives_recession():
    t = DiagonalTail("interleave", (0.0,), parts=(DiagonalTail("linear"),
                                                   DiagonalTail("recip_k", (0.0,))))
    data = StructuredFamily(40, t).essential_points()
    assert data.points == ((0.0, 0.0),) and data.recession == ((1.0, 0.0),)


def test_purely_unbounded_tail_has_empty_essential_range():
    with pytest.raises(ModelError, match="empty"):
        StructuredFamily(20, DiagonalTail("linear")).essential_points()


def test_family_a1():
    A0, A1 = np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(PolynomialFamily((A0, A1)).a1().data, A1)
    f = example62_family("a", 20)
    a = example62_weights("a", 1).truncate(20).vector()
    assert np.allclose(f.a1().data, -np.outer(a, a))
    sq = StructuredFamily(3, DiagonalTail("constant", (0.0,)),
                          rank_one=(RankOneTerm(np.ones(3), (0.0, 0.0, 1.0), -1),))
    with pytest.raises(ModelError, match="no first-order term"):
        sq.a1()
    with pytest.raises(ModelError, match="no first-order term"):
        PolynomialFamily((A0,)).a1()


def test_evaluate_is_linear_in_coefficients(rng):
    f = PolynomialFamily(tuple(random_hermitian(rng, 4) for _ in range(3)))
    g = PolynomialFamily(tuple(random_hermitian(rng, 4) for _ in range(2)))
    t = 0.37
    lhs = (f + g).evaluate(t).data
    rhs = f.evaluate(t).data + g.evaluate(t).data
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * np.max(np.abs(rhs))


def test_finite_difference_at_zero_is_second_order(rng):
    f = PolynomialFamily(tuple(random_hermitian(rng, 5) for _ in range(4)))
    A1 = f.a1().data
    errs = []
    for k in range(5):
        h = 1e-2 / 2 ** k
        fd = (f.evaluate(h).data - f.evaluate(-h).data) / (2 * h)
        errs.append(np.max(np.abs(fd - A1)))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 < r < 4.5 for r in ratios)


def test_derivative_matches_formula(rng):
    C = [random_hermitian(rng, 3) for _ in range(3)]
    f = PolynomialFamily(tuple(C))
    t = 0.4
    assert np.allclose(f.derivative(t).data, C[1] + 2 * t * C[2])


def test_parse_minimal_polynomial():
    f = parse_family('{"type": "polynomial", "dim": 2, "coefficients": [[1, 0, 0, [2, 0]]]}')
    assert isinstance(f, PolynomialFamily) and f.dim == 2


def test_parse_preset_example62a():
    f = parse_family({"type": "preset", "name": "example62a", "dim": 100})
    assert isinstance(f, StructuredFamily) and f.dim == 100
    w = np.abs(f.rank_one[0].vector) ** 2
    assert list(np.flatnonzero(w) + 1) == [1, 16, 64]
    assert np.allclose(w[[0, 15, 63]], [1.0, 0.75, 0.1875], rtol=1e-15)


def test_parse_rejects_non_hermitian():
    with pytest.raises(NotHermitianError, match="defect"):
        parse_family({"type": "polynomial", "dim": 2,
                      "coefficients": [[1, 0, 0, 1], [0, 1, 2, 0]]})


def test_parse_errors_carry_field_path():
    with pytest.raises(FamilyParseError) as err:
        parse_family({"type": "structured", "dim": 2,
                      "diagonal": {"rule": "exp_neg_k", "limit_points": [0], "bogus": 1}})
    assert err.value.path == ("diagonal",)
    with pytest.raises(FamilyParseError) as err:
        parse_family({"type": "polynomial", "dim": 2, "coefficients": [[1, 0, 0]]})
    assert err.value.path == ("coefficients", 0)
    with pytest.raises(FamilyParseError, match="invalid JSON"):
        parse_family("{nope")


def test_structured_document_roundtrip():
    doc = {"type": "structured", "dim": 5,
           "diagonal": {"rule": "exp_neg_k", "limit_points": [0.0], "head": [0.0]},
           "a1_diagonal": {"rule": "constant", "limit_points": [2.0], "value": 2.0},
           "rank_one": [{"vector": [1, 0, [0, 1], 0, 0], "coupling": "t", "sign": -1}]}
    f = parse_family(json.dumps(doc))
    g = parse_family(serialize_family(f))
    assert same_family(f, g)
    assert serialize_family(g) == serialize_family(f)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.one_of(st.none(), st.floats(0.1, 10)))
def test_polynomial_roundtrip(n, seed, radius):
    rng = np.random.default_rng(seed)
    f = PolynomialFamily(tuple(random_hermitian(rng, n) for _ in range(2)), radius)
    g = parse_family(json.loads(json.dumps(serialize_family(f))))
    assert same_family(f, g)


def test_essential_sigma_and_scaling():
    data = EssentialData(((0.0, 1.0), (0.0, -2.0), (1.0, 0.0)))
    assert data.sigma(0.1) == pytest.approx(-0.2)
    rotated = data.scaled(1j)
    assert (-1.0, 0.0) in rotated.points


def test_rank_one_validation():
    with pytest.raises(ModelError):
        RankOneTerm([1.0, math.inf])
    with pytest.raises(ModelError):
        RankOneTerm([1.0], sign=2)
    with pytest.raises(ModelError, match="length"):
        StructuredFamily(3, EXP_TAIL, rank_one=(RankOneTerm([1.0, 0.0]),))
