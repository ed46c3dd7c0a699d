import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from invexreg.errors import DimensionMismatch, NonFinite, NotFullRowRank, NotSPD
from invexreg.linalg import (
    as_vector,
    extreme_eigs_sym,
    gram_extreme_eigs,
    krylov_norm,
    power_iteration,
    row_pinv_apply,
    spd_solve,
)


def test_spd_solve_identity():
    np.testing.assert_array_equal(spd_solve(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_spd_solve_scalar_matrix():
    np.testing.assert_allclose(spd_solve(2 * np.eye(2), [4.0, 6.0]), [2.0, 3.0], rtol=0, atol=1e-15)


def test_spd_solve_random_residual():
    rng = np.random.default_rng(0)
    W = rng.standard_normal((5, 5))
    M = W.T @ W + np.eye(5)
    rhs = rng.standard_normal(5)
    z = spd_solve(M, rhs)
    assert np.linalg.norm(M @ z - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_spd_solve_errors():
    with pytest.raises(NotSPD):
        spd_solve(np.diag([1.0, -1.0]), [1.0, 1.0])
    with pytest.raises(NotSPD):
        spd_solve(np.zeros((2, 2)), [1.0, 1.0])
    with pytest.raises(DimensionMismatch):
        spd_solve(np.eye(3), [1.0, 2.0])


def test_vectors_validated():
    with pytest.raises(DimensionMismatch):
        as_vector([])
    with pytest.raises(NonFinite):
        as_vector([1.0, np.nan])


def test_row_pinv_identity_and_single_row():
    np.testing.assert_allclose(row_pinv_apply(np.eye(2), [3.0, 4.0]), [3.0, 4.0])
    np.testing.assert_allclose(row_pinv_apply([[1.0, 1.0]], [2.0]), [1.0, 1.0])


def test_row_pinv_right_inverse_on_augmented_jacobian():
    rng = np.random.default_rng(1)
    J = rng.standard_normal((3, 5))
    M = np.hstack([J, 0.7 * np.eye(3)])
    v = rng.standard_normal(3)
    assert np.linalg.norm(M @ row_pinv_apply(M, v) - v) <= 1e-10 * np.linalg.norm(v)


def test_row_pinv_matches_numpy_pinv():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((4, 9))
    v = rng.standard_normal(4)
    np.testing.assert_allclose(row_pinv_apply(M, v), np.linalg.pinv(M) @ v, atol=1e-12)


def test_row_pinv_rank_deficient():
    with pytest.raises(NotFullRowRank):
        row_pinv_apply([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])
    with pytest.raises(NotFullRowRank):
        row_pinv_apply(np.ones((3, 2)), [1.0, 1.0, 1.0])


@settings(max_examples=60, deadline=None)
@given(
    J=arrays(np.float64, (4, 7), elements=st.floats(-5, 5)),
    lam=st.floats(0.05, 5.0),
    v=arrays(np.float64, 4, elements=st.floats(-10, 10)),
)
def test_row_pinv_properties(J, lam, v):
    M = np.hstack([J, lam * np.eye(4)])
    z = row_pinv_apply(M, v)
    scale = max(np.linalg.norm(v), 1e-300)
    assert np.linalg.norm(M @ z - v) <= 1e-10 * scale
    # z = M^T w for some w: its projection onto the row space is itself
    w, *_ = np.linalg.lstsq(M.T, z, rcond=None)
    np.testing.assert_allclose(M.T @ w, z, atol=1e-9 * (1 + np.linalg.norm(z)))


def test_extreme_eigs_examples():
    assert extreme_eigs_sym(np.diag([1.0, 4.0, 9.0])) == (1.0, 9.0)
    assert extreme_eigs_sym(np.eye(4)) == (1.0, 1.0)
    rng = np.random.default_rng(3)
    J = rng.standard_normal((4, 6))
    lo, _ = extreme_eigs_sym(J @ J.T + 4.0 * np.eye(4))
    assert lo >= 4.0


@settings(max_examples=60, deadline=None)
@given(J=arrays(np.float64, (5, 3), elements=st.floats(-10, 10)), lam=st.floats(1e-3, 10.0))
def test_gram_eig_floor_any_jacobian(J, lam):
    # 5 x 3 Jacobian: J J^T is singular, so the floor is hit exactly
    lo, hi = gram_extreme_eigs(np.hstack([J, lam * np.eye(5)]))
    assert lo >= lam ** 2 * (1 - 1e-12)
    assert hi >= lo


def test_gram_matches_eigvalsh():
    rng = np.random.default_rng(4)
    F = rng.standard_normal((4, 6))
    lo, hi = gram_extreme_eigs(F)
    w = np.linalg.eigvalsh(F @ F.T)
    np.testing.assert_allclose([lo, hi], [w[0], w[-1]], rtol=1e-10)


def test_norm_iterations_on_diagonal():
    D = np.diag([1.0, -3.0, 2.0, 0.5])
    nrm, v = power_iteration(lambda u: D @ u, 4, max_iters=500)
    assert nrm == pytest.approx(3.0, rel=1e-7)
    nrm, v = krylov_norm(lambda u: D @ u, 4)
    assert nrm == pytest.approx(3.0, rel=1e-12)
    assert abs(v[1]) == pytest.approx(1.0, rel=1e-8)


def test_krylov_handles_clustered_spectrum():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.standard_normal((40, 40)))
    evals = np.linspace(0.0, 10.0, 40)
    evals[-2] = 9.9999
    H = Q @ np.diag(evals) @ Q.T
    nrm, _ = krylov_norm(lambda u: H @ u, 40)
    assert nrm == pytest.approx(10.0, rel=1e-8)
