"""Dense/sparse helpers, SVD, pseudoinverse, vec and Kronecker utilities."""

import numpy as np
import pytest
import scipy.sparse as sp

from kaczmat.matrices import (
    KRON_MAX_ENTRIES,
    KronSizeError,
    as_csr,
    as_dense,
    col_norms,
    default_rank_tol,
    frobenius_norm,
    is_sparse,
    kron,
    pinv,
    row_norms,
    sigma_extremes,
    svd,
    unvec,
    vec,
)


def test_frobenius_norm_matches_numpy():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((7, 5))
    assert frobenius_norm(M) == pytest.approx(np.linalg.norm(M))
    assert frobenius_norm(sp.csr_array(M)) == pytest.approx(np.linalg.norm(M))
    assert frobenius_norm(np.zeros((3, 3))) == 0.0


def test_row_and_col_norms():
    M = np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0]])
    np.testing.assert_allclose(row_norms(M), [5.0, 0.0, 1.0])
    np.testing.assert_allclose(col_norms(M), [np.sqrt(10.0), 4.0])
    # sparse input goes through the same code path
    np.testing.assert_allclose(row_norms(sp.csr_array(M)), [5.0, 0.0, 1.0])
    np.testing.assert_allclose(col_norms(sp.csr_array(M)), [np.sqrt(10.0), 4.0])


def test_svd_reconstructs():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((6, 4))
    f = svd(M)
    np.testing.assert_allclose(f.reconstruct(), M, atol=1e-12)
    assert np.all(np.diff(f.sigma) <= 0)
    np.testing.assert_allclose(f.u.T @ f.u, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(f.vt @ f.vt.T, np.eye(4), atol=1e-12)


def test_sigma_extremes_identity():
    smax, smin = sigma_extremes(np.eye(4))
    assert smax == pytest.approx(1.0)
    assert smin == pytest.approx(1.0)


def test_sigma_extremes_rank_deficient():
    # rank 1, sigma_min must be the smallest NONZERO singular value
    M = np.outer([1.0, 2.0], [3.0, 4.0])
    smax, smin = sigma_extremes(M)
    assert smax == pytest.approx(np.sqrt(5.0 * 25.0))
    assert smin == pytest.approx(smax)


def test_sigma_extremes_zero_matrix_raises():
    with pytest.raises(ValueError):
        sigma_extremes(np.zeros((3, 2)))


@pytest.mark.parametrize("shape,rank", [((5, 3), 3), ((3, 5), 2), ((6, 6), 4), ((4, 4), 1), ((8, 2), 2)])
def test_pinv_moore_penrose(shape, rank):
    rng = np.random.default_rng(hash(shape) % 2**32)
    m, n = shape
    M = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))
    P = pinv(M)
    tol = 1e-8 * max(1.0, frobenius_norm(M))
    np.testing.assert_allclose(M @ P @ M, M, atol=tol)
    np.testing.assert_allclose(P @ M @ P, P, atol=tol)
    np.testing.assert_allclose((M @ P).T, M @ P, atol=tol)
    np.testing.assert_allclose((P @ M).T, P @ M, atol=tol)


def test_pinv_truncates_below_rank_tol():
    # rank-2 matrix plus small noise must invert as if rank 2 when told so
    rng = np.random.default_rng(5)
    M = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
    noisy = M + 1e-8 * rng.standard_normal(M.shape)
    P = pinv(noisy, rank_tol=1e-6)
    assert frobenius_norm(P) < 1e3  # inverting the noise modes would give ~1e8
    np.testing.assert_allclose(P, pinv(M), atol=1e-6)


def test_pinv_zero_matrix():
    np.testing.assert_array_equal(pinv(np.zeros((3, 5))), np.zeros((5, 3)))


def test_pinv_negative_rank_tol_raises():
    with pytest.raises(ValueError):
        pinv(np.eye(2), rank_tol=-1.0)


def test_default_rank_tol():
    eps = np.finfo(np.float64).eps
    assert default_rank_tol(np.zeros((4, 9))) == pytest.approx(9 * eps)
    assert default_rank_tol(np.zeros((9, 4))) == pytest.approx(9 * eps)


def test_vec_is_column_stacking():
    M = np.array([[1.0, 3.0], [2.0, 4.0]])
    assert vec(M).shape == (4, 1)
    np.testing.assert_array_equal(vec(M).ravel(), [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(unvec(vec(M), 2, 2), M)


def test_vec_unvec_roundtrip():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((5, 7))
    np.testing.assert_array_equal(unvec(vec(M), 5, 7), M)


def test_unvec_size_mismatch():
    with pytest.raises(ValueError):
        unvec(np.zeros(5), 2, 3)


def test_kron_vec_identity():
    # vec(A X B) == kron(B.T, A) vec(X)
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 3))
    X = rng.standard_normal((3, 5))
    B = rng.standard_normal((5, 2))
    lhs = vec(A @ X @ B)
    rhs = kron(B.T, A) @ vec(X)
    assert lhs.shape == rhs.shape == (8, 1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_kron_norm_and_extremes_multiply():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((4, 3))
    B = rng.standard_normal((3, 4))
    K = kron(A, B)
    assert frobenius_norm(K) == pytest.approx(frobenius_norm(A) * frobenius_norm(B), rel=1e-10)
    ka, kb = sigma_extremes(A), sigma_extremes(B)
    kmax, kmin = sigma_extremes(K)
    assert kmax == pytest.approx(ka[0] * kb[0], rel=1e-10)
    assert kmin == pytest.approx(ka[1] * kb[1], rel=1e-10)


def test_kron_size_cap():
    n = int(np.sqrt(KRON_MAX_ENTRIES)) + 1
    A = np.ones((n, 1))
    B = np.ones((n, 1))
    with pytest.raises(KronSizeError):
        kron(A, B)


def test_as_dense_and_as_csr():
    M = np.array([[1.0, 0.0], [0.0, 2.0]])
    S = as_csr(M)
    assert is_sparse(S) and not is_sparse(M)
    np.testing.assert_array_equal(as_dense(S), M)
    # canonical form: duplicates summed, indices sorted
    coo = sp.coo_array((np.array([1.0, 1.0]), (np.array([0, 0]), np.array([0, 0]))), shape=(2, 2))
    S2 = as_csr(coo)
    assert S2[0, 0] == 2.0
    assert S2.has_canonical_format


def test_as_dense_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_dense(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        as_dense(np.array([[np.inf, 1.0]]))


def test_as_dense_rejects_wrong_ndim():
    with pytest.raises(ValueError):
        as_dense(np.zeros(3))
    with pytest.raises(ValueError):
        as_dense(np.zeros((2, 2, 2)))
