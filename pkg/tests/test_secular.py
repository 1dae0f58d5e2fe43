import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from eigabsorb.casebook import example62_models
from eigabsorb.secular import (BracketError, SecularError, SecularModel,
                               certified_negative_count, crossing_locate, crossing_scan,
                               eigenvector, example62_weights, f_eval, f_prime, lambda_min,
                               probe_bounds, tail_sum)


@pytest.fixture(scope="module")
def models():
    return example62_models()


def test_f_eval_single_and_two_terms():
    assert f_eval(SecularModel([0.0], [1.0]), -0.5) == 2.0
    assert f_eval(SecularModel([0.0, 1.0], [1.0, 1.0]), -1.0) == 1.5


def test_f_eval_domain_error():
    with pytest.raises(SecularError):
        f_eval(SecularModel([0.0], [1.0]), 0.0)


def test_f_eval_matches_extended_precision(models):
    a, _ = models
    lam = -math.exp(-25)
    with mpmath.workdps(50):
        mlam = mpmath.mpf(lam)
        ref = mpmath.fsum(mpmath.mpf(float(w)) / (mpmath.mpf(float(d)) - mlam)
                          for d, w in zip(a.d[a.support], a.w[a.support]))
    got = f_eval(a, lam)
    assert got > math.exp(25)
    assert abs(got - float(ref)) <= 1e-14 * float(ref)


def test_f_prime_is_derivative():
    m = SecularModel([0.0, 0.5, 2.0], [1.0, 0.3, 0.2])
    lam, h = -0.7, 1e-6
    fd = (f_eval(m, lam + h) - f_eval(m, lam - h)) / (2 * h)
    assert f_prime(m, lam) == pytest.approx(fd, rel=1e-8)


@given(st.lists(st.floats(0, 5), min_size=1, max_size=8), st.floats(0.01, 10), st.floats(0.01, 10))
def test_monotone(ds, x, y):
    d = np.array([0.0] + ds)
    w = np.linspace(1, 2, d.size)
    m = SecularModel(d, w)
    l1, l2 = -max(x, y) - 0.01, -min(x, y)
    if l1 < l2:
        assert f_eval(m, l1) < f_eval(m, l2)


def test_lambda_min_trivial_model():
    m = SecularModel([0.0], [1.0])
    for t in (1e-250, 1e-3, 0.7, 5.0):
        assert lambda_min(m, t) == pytest.approx(-t, rel=1e-15)


@pytest.mark.parametrize("t", [1e-3, 1e-2, 1e-1, 0.5])
def test_lambda_min_matches_dense(t):
    m = example62_weights("a", 3).truncate(100)
    dense = np.linalg.eigvalsh(m.dense_matrix(t))[0]
    assert abs(lambda_min(m, t) - dense) <= 1e-10 * abs(dense)
    assert abs(f_eval(m, lambda_min(m, t)) - 1 / t) <= 1e-12 / t


def test_single_negative_eigenvalue_certified():
    m = example62_weights("a", 4).truncate(200)
    assert certified_negative_count(m, 0.1) == 1


@given(st.floats(0.1, 10), st.floats(1e-4, 1.0))
def test_weight_scaling(s, t):
    m = SecularModel([0.0, 0.3, 1.0, 2.0], [1.0, 0.5, 0.25, 0.1])
    assert lambda_min(m.scaled(s), t) == pytest.approx(lambda_min(m, s * t), rel=1e-12)


def test_slope_at_small_t_is_minus_first_weight():
    m = example62_weights("a", 5).truncate(400)
    assert lambda_min(m, 1e-250) / 1e-250 == pytest.approx(-1.0, abs=1e-12)


def test_no_pole_weight_raises():
    with pytest.raises(BracketError):
        lambda_min(SecularModel([0.0, 1.0], [0.0, 1.0]), 0.1)


def test_eigenvector_residual():
    m = example62_weights("b", 2).truncate(60)
    t = 0.2
    x = eigenvector(m, t)
    M = m.dense_matrix(t)
    lam = lambda_min(m, t)
    assert np.linalg.norm(M @ x - lam * x) <= 1e-12


def test_example62_a_weights():
    m = example62_weights("a", 2)
    assert m.exact_weights == {1: 1, 16: Fraction(3, 4), 64: Fraction(3, 16)}
    assert list(np.flatnonzero(m.w) + 1) == [1, 16, 64]
    assert m.d[0] == 0.0 and m.d[1] == math.exp(-2)


def test_example62_b_weights():
    m = example62_weights("b", 1)
    assert m.exact_weights == {1: 1, 2: Fraction(1, 2), 36: Fraction(3, 8)}


@pytest.mark.parametrize("n", [1, 3, 8])
def test_partial_sums(n):
    assert tail_sum(example62_weights("a", n)) == 1 - Fraction(1, 4 ** n)
    assert tail_sum(example62_weights("b", n)) == 1 - Fraction(1, 2 * 4 ** n)


def test_tail_sums_approach_one():
    gaps = [1 - float(tail_sum(example62_weights(k, n))) for k in "ab" for n in (2, 6, 12)]
    assert max(gaps[2], gaps[5]) < 1e-7


def test_underflow_flush_recorded():
    m = example62_weights("a", 7)   # N = 900
    assert m.flushed[0] == 691 and m.d[690] == 0.0 and m.d[689] > 0


def test_scan_signs(models):
    rows = crossing_scan(*models, [5, 7, 9, 11])
    assert [r.sign for r in rows] == [-1, 1, -1, 1]
    assert all(r.bound_a_ok and r.bound_b_ok for r in rows)


def test_scan_alternates_over_whole_range(models):
    rows = crossing_scan(*models, range(5, 27, 2))
    assert [r.sign for r in rows] == [(-1) ** (i + 1) for i in range(len(rows))]


def test_probe_bounds_by_hand():
    # m = 5, n = 1: f_a < e^25 (1 + 1/32 + (31/32)/4), f_b > e^25 (1 + (31/32) * 2/4)
    kind_a, ua, kind_b, lb = probe_bounds(5)
    assert kind_a == "<" and kind_b == ">"
    assert ua == pytest.approx(math.exp(25) * (1 + 1 / 32 + 31 / 128))
    assert lb == pytest.approx(math.exp(25) * (1 + 31 / 64))


def test_scan_range_errors(models):
    with pytest.raises(ValueError):
        crossing_scan(*models, [27])
    with pytest.raises(ValueError):
        crossing_scan(*models, [6])


@pytest.mark.parametrize("lo,hi", [(25, 49), (49, 81)])
def test_crossing_locate(models, lo, hi):
    c = crossing_locate(*models, (-math.exp(-lo), -math.exp(-hi)))
    assert -math.exp(-lo) < c.lambda_star < -math.exp(-hi)
    assert c.consistent
    assert c.t_star == pytest.approx(1 / f_eval(models[0], c.lambda_star))


def test_crossing_bracket_without_sign_change(models):
    with pytest.raises(BracketError):
        crossing_locate(*models, (-math.exp(-23), -math.exp(-24)))
