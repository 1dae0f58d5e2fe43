import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eigabsorb.families import (DiagonalTail, PolynomialFamily, StructuredFamily,
                                example62_family)
from eigabsorb.linalg import eigvalsh
from eigabsorb.perturbation import (AbsorptionOptions, InsufficientDataError, IsolationError,
                                    NoKernelError, TrackingWarning, TrajectorySet,
                                    b0_compression, derivative_check, eigenvector_alignment,
                                    isolated_branch_slopes, kernel_projection, slope_estimate,
                                    track, verify_absorption)
from eigabsorb.secular import example62_weights, lambda_min

from .conftest import random_hermitian

CROSSING = PolynomialFamily((np.diag([-1.0, 1.0]), np.diag([1.0, -1.0])))
DEEP = tuple(np.geomspace(1e-280, 1e-200, 32))


def _synthetic(t, values):
    t = np.asarray(t)
    v = np.atleast_2d(values)
    return TrajectorySet(t, v, np.zeros_like(v, bool), np.full(t.size, np.nan), np.ones(t.size))


def test_track_straight_lines():
    grid = np.linspace(0.1, 0.9, 9)
    traj = track(CROSSING, grid, 2)
    assert np.allclose(traj.branch(0), -1 + grid)
    assert np.allclose(traj.branch(1), 1 - grid)
    # linear extrapolation of both branches meets at t = 1
    b0 = np.polyfit(grid, traj.branch(0), 1)
    b1 = np.polyfit(grid, traj.branch(1), 1)
    assert (b1[1] - b0[1]) / (b0[0] - b1[0]) == pytest.approx(1.0)


def test_track_follows_branches_through_a_crossing():
    grid = np.linspace(0.5, 1.5, 11)
    traj = track(CROSSING, grid, 2)
    assert np.allclose(traj.branch(0), -1 + grid)
    assert not traj.warnings


def test_track_example62_against_secular():
    f = example62_family("a", 200)
    grid = np.geomspace(1e-3, 0.5, 12)
    traj = track(f, grid, 1)
    model = example62_weights("a", 4).truncate(200)
    ref = np.array([lambda_min(model, t) for t in grid])
    assert traj.method == "secular"
    assert np.max(np.abs(traj.branch(0) - ref) / np.abs(ref)) <= 1e-10
    dense = track(f, grid, 1, use_secular=False)
    assert np.max(np.abs(dense.branch(0) - ref) / np.abs(ref)) <= 1e-10
    assert traj.below_sigma.all()


def test_track_values_are_bottom_spectrum(rng):
    f = PolynomialFamily((random_hermitian(rng, 8), random_hermitian(rng, 8)))
    grid = np.linspace(0.01, 1.0, 60)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrackingWarning)
        traj = track(f, grid, 4)
    for i, t in enumerate(grid):
        w = eigvalsh(f.evaluate(t))[:4]
        assert np.allclose(np.sort(traj.values[:, i]), w, atol=1e-10 * traj.scale[i], rtol=0)


def test_track_rejects_bad_grid():
    with pytest.raises(ValueError):
        track(CROSSING, [0.2, 0.1], 1)
    with pytest.raises(ValueError):
        track(CROSSING, [0.1, 0.2], 3)


def test_jump_is_flagged():
    # an eigenvalue that jumps discontinuously is still reported, with a warning
    class Jumpy(PolynomialFamily):
        def evaluate(self, t):
            return super().evaluate(t) + (np.diag([0.0, 5.0]) if t > 0.5 else 0.0)

    f = Jumpy((np.diag([0.0, 1.0]), np.diag([0.01, 0.02])))
    with pytest.warns(TrackingWarning, match="jumps"):
        traj = track(f, np.linspace(0.1, 0.9, 9), 2)
    assert any("jumps" in w for w in traj.warnings)


def test_kernel_projection_cases():
    assert kernel_projection(np.diag([0.0, 0.0, 1.0]), 0.0, 1e-8).rank == 2
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        P = kernel_projection(np.diag([1e-12, 1.0]), 0.0, 1e-8)
    assert P.rank == 1 and not P.warnings
    assert kernel_projection(np.diag([1.0, 2.0]), 0.0, 1e-8).rank == 0


def test_kernel_projection_warns_near_cut():
    with pytest.warns(TrackingWarning):
        P = kernel_projection(np.diag([0.0, 1.5e-8]), 0.0, 1e-8)
    assert P.rank == 1 and P.warnings


def test_kernel_projection_dense(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    A = Q @ np.diag([0.0, 0.0, 1.0, 2.0, 3.0]) @ Q.T
    P = kernel_projection(A, 0.0, 1e-8)
    assert P.rank == 2
    assert np.linalg.norm(A @ P.basis) <= 1e-8 * (1 + 3.0)
    assert np.allclose(P.basis.conj().T @ P.basis, np.eye(2), atol=1e-10)


def test_b0_block_diagonal():
    P = kernel_projection(np.diag([0.0, 0.0, 1.0]), 0.0, 1e-8)
    _, mu = b0_compression(P, np.diag([5.0, 7.0, 9.0]))
    assert np.allclose(mu, [5.0, 7.0])


def test_b0_example62():
    f = example62_family("a", 100)
    P = kernel_projection(f.evaluate(0.0), 0.0, 1e-60)
    _, mu = b0_compression(P, f.a1())
    assert P.rank == 1 and np.abs(P.basis[0, 0]) == 1.0
    assert list(mu) == [-1.0]


def test_b0_matches_direct_2x2(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    A0 = Q @ np.diag([0, 0, 1, 2, 3, 4.0]) @ Q.conj().T
    A1 = random_hermitian(rng, 6)
    P = kernel_projection(A0, 0.0, 1e-8)
    _, mu = b0_compression(P, A1)
    V = Q[:, :2]
    assert np.allclose(mu, np.linalg.eigvalsh(V.conj().T @ A1 @ V), atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_b0_is_basis_independent(seed):
    rng = np.random.default_rng(seed)
    A1 = random_hermitian(rng, 5)
    P = kernel_projection(np.diag([0.0, 0.0, 0.0, 1.0, 2.0]), 0.0, 1e-8)
    U, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    R = type(P)(P.level, P.tol_kernel, P.basis @ U)
    assert np.allclose(b0_compression(P, A1)[1], b0_compression(R, A1)[1], atol=1e-10)


def test_b0_empty_kernel():
    with pytest.raises(NoKernelError):
        b0_compression(kernel_projection(np.eye(2), 0.0, 1e-8), np.eye(2))


def test_slope_of_quadratic_branch():
    t = np.geomspace(1e-4, 1e-2, 12)
    est = slope_estimate(_synthetic(t, -2 * t + 3 * t ** 2), 0, 0.0, 0.0)
    assert abs(est.beta + 2) <= 1e-8


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_slope_exact_on_polynomials(beta, c):
    t = np.linspace(0.01, 0.1, 10)
    est = slope_estimate(_synthetic(t, beta * t + c * t ** 2), 0, 0.0, 0.0)
    assert abs(est.beta - beta) <= 1e-10


def test_slow_branch_is_flagged():
    t = np.geomspace(1e-12, 1e-6, 16)
    est = slope_estimate(_synthetic(t, -t * (1 + 1 / np.log(t))), 0, 0.0, 0.0)
    assert est.slow
    assert abs(est.beta + 1) <= est.uncertainty + 0.05


def test_slope_needs_four_points():
    with pytest.raises(InsufficientDataError):
        slope_estimate(_synthetic([0.1, 0.2, 0.3], [1.0, 2.0, 3.0]), 0, 0.0, 0.0)


def test_absorption_example62():
    rep = verify_absorption(example62_family("a", 400), 0.0, AbsorptionOptions(t_grid=DEEP))
    assert rep.verdict == "pass" and rep.kernel_rank == 1
    assert len(rep.slopes) == 1 and abs(rep.slopes[0][1] + 1) <= 1e-3
    assert rep.omega == 0.0 and list(rep.mu) == [-1.0]


def test_absorption_example62_shallow_grid_misses_limit():
    # for t >= 1e-4 the tail weights still act like poles at 0, so the slope is near -2
    grid = tuple(np.linspace(1e-4, 0.5, 64))
    rep = verify_absorption(example62_family("a", 400), 0.0, AbsorptionOptions(t_grid=grid))
    assert rep.verdict == "fail"
    assert rep.slopes[0][1] == pytest.approx(-2.0, abs=0.01)


def test_absorption_closed_form_diagonal():
    N = 60
    f = StructuredFamily(N, DiagonalTail("recip_k", (0.0,), head=(0.0,)),
                         DiagonalTail("constant", (2.0,), offset=2.0, head=(1.0,)))
    rep = verify_absorption(f, 0.0, AbsorptionOptions(t_grid=tuple(np.geomspace(1e-8, 1e-6, 12))))
    assert rep.verdict == "pass" and rep.omega == 2.0
    assert rep.slopes[0][1] == pytest.approx(1.0, abs=1e-10)


def test_absorption_vacuous():
    f = StructuredFamily(40, DiagonalTail("recip_k", (0.0,)),
                         DiagonalTail("constant", (2.0,), offset=2.0))
    rep = verify_absorption(f, 0.0, AbsorptionOptions(t_grid=tuple(np.geomspace(1e-8, 1e-6, 12))))
    assert rep.verdict == "no-absorption" and rep.passed


def test_absorption_branch_above_omega_not_counted():
    # kernel slope 3 exceeds omega = 2: the branch rises into the essential range
    f = StructuredFamily(40, DiagonalTail("recip_k", (0.0,), head=(0.0,)),
                         DiagonalTail("constant", (2.0,), offset=2.0, head=(3.0,)))
    rep = verify_absorption(f, 0.0, AbsorptionOptions(t_grid=tuple(np.geomspace(1e-8, 1e-6, 12))))
    assert rep.verdict == "pass" and not rep.slopes


def test_absorption_polynomial_ordering(rng):
    A0 = np.diag([0.0, 0.0, 1.0, 1.5, 2.0])
    A1 = random_hermitian(rng, 5)
    rep = verify_absorption(PolynomialFamily((A0, A1)), 0.0,
                            AbsorptionOptions(t_grid=tuple(np.geomspace(1e-6, 1e-4, 16)),
                                              level=0.0))
    betas = [b for _, b, _ in rep.slopes]
    assert betas == sorted(betas) and list(rep.mu) == sorted(rep.mu)
    assert rep.verdict == "pass"
    assert max(g for _, _, g in rep.matched_pairs) <= 1e-6


def test_eigenvector_alignment(rng):
    A0 = np.diag([0.0, 0.0, 1.0, 2.0])
    A1 = random_hermitian(rng, 4)
    f = PolynomialFamily((A0, A1))
    P = kernel_projection(A0, 0.0, 1e-8)
    norm, dist = eigenvector_alignment(f, 1e-6, P, 0)
    assert norm >= 0.99 and dist <= 1e-2


def test_report_serialization_fields():
    rep = verify_absorption(example62_family("a", 400), 0.0, AbsorptionOptions(t_grid=DEEP))
    kv = dict(rep.key_values())
    assert kv["verdict"] == "pass" and kv["absorbed_branches"] == 1
    assert rep.rows()[0][0] == 0 and rep.rows()[0][3] == -1.0


def test_derivative_linear_branch():
    r = derivative_check(CROSSING, 0.3, 0)
    assert r.passed and r.analytic == pytest.approx(1.0)


def test_derivative_random_family(rng):
    f = PolynomialFamily(tuple(random_hermitian(rng, 6) for _ in range(3)))
    r = derivative_check(f, 0.2, 0)
    assert r.passed
    ratios = [a / b for a, b in zip(r.errors, r.errors[1:]) if b > 1e-11]
    assert all(3.0 < q < 5.0 for q in ratios[:3])


def test_derivative_at_crossing():
    assert derivative_check(CROSSING, 1.0, 0).status == "crossing"


def test_isolated_branch_slopes():
    A1 = np.array([[1.0, 2.0], [2.0, -1.0]])
    assert np.allclose(isolated_branch_slopes(PolynomialFamily((np.zeros((2, 2)), A1)), 0.0, 1e-8),
                       np.linalg.eigvalsh(A1))
    f = PolynomialFamily((np.diag([0.0, 0.0, 5.0]), np.diag([1.0, 2.0, 3.0])))
    assert np.allclose(isolated_branch_slopes(f, 0.0, 1e-8), [1.0, 2.0])


def test_isolation_error():
    f = PolynomialFamily((np.diag([0.0, 1e-9]), np.eye(2)))
    with pytest.raises(IsolationError):
        isolated_branch_slopes(f, 0.0, 2e-10)


def test_isolated_slopes_predict_tracked_derivatives(rng):
    A0 = np.diag([0.0, 0.0, 0.0, 2.0, 3.0])
    A1 = random_hermitian(rng, 5)
    f = PolynomialFamily((A0, A1))
    pred = isolated_branch_slopes(f, 0.0, 1e-8)
    traj = track(f, np.geomspace(1e-7, 1e-5, 12), 3)
    betas = sorted(slope_estimate(traj, b, 0.0, 0.0).beta for b in range(3))
    assert np.allclose(betas, pred, atol=1e-6)
    assert not math.isnan(betas[0])
