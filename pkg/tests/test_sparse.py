"""Sparse-core tests: CSR primitives checked against dense numpy oracles."""
import numpy as np
import pytest

from deflamg import (
    DimensionError,
    LuFactorization,
    SingularMatrixError,
    SparseMatrix,
    StructureError,
    dense_lu,
    spgemm,
    spmv,
    transpose,
)


def tridiag(n, lo=-1.0, di=2.0, hi=-1.0):
    a = np.zeros((n, n))
    for i in range(n):
        a[i, i] = di
        if i > 0:
            a[i, i - 1] = lo
        if i + 1 < n:
            a[i, i + 1] = hi
    return a


# -- SparseMatrix construction -------------------------------------------------


def test_from_coo_sums_duplicates():
    A = SparseMatrix.from_coo(2, 2, [0, 0, 1], [1, 1, 0], [1.0, 2.0, 5.0])
    assert A.nnz == 2
    assert A.to_dense().tolist() == [[0.0, 3.0], [5.0, 0.0]]


def test_from_coo_sorts_columns():
    A = SparseMatrix.from_coo(1, 4, [0, 0, 0], [3, 0, 2], [1.0, 2.0, 3.0])
    assert A.col_idx.tolist() == [0, 2, 3]
    A.validate()


def test_from_coo_bounds_checked():
    with pytest.raises(StructureError):
        SparseMatrix.from_coo(2, 2, [0, 2], [0, 0], [1.0, 1.0])
    with pytest.raises(StructureError):
        SparseMatrix.from_coo(2, 2, [0, 1], [0, -1], [1.0, 1.0])


def test_matrices_are_frozen():
    A = SparseMatrix.identity(3)
    with pytest.raises(ValueError):
        A.values[0] = 7.0


def test_validate_rejects_unsorted_columns():
    A = SparseMatrix(1, 3, np.array([0, 2]), np.array([2, 0]), np.array([1.0, 1.0]))
    with pytest.raises(StructureError):
        A.validate()


def test_empty_rows_roundtrip():
    d = np.zeros((4, 3))
    d[2, 1] = 4.0
    A = SparseMatrix.from_dense(d)
    A.validate()
    assert A.nnz == 1
    np.testing.assert_array_equal(A.to_dense(), d)


def test_diagonal_extraction():
    d = np.array([[3.0, 1.0, 0.0], [0.0, 0.0, 2.0], [0.0, 5.0, -4.0]])
    A = SparseMatrix.from_dense(d)
    np.testing.assert_array_equal(A.diagonal(), [3.0, 0.0, -4.0])


# -- spmv ------------------------------------------------------------------


def test_spmv_hand_value():
    # tridiag(-1, 2, -1) of size 4 against (1, 2, 3, 4)
    A = SparseMatrix.from_dense(tridiag(4))
    y = spmv(1.0, A, np.array([1.0, 2.0, 3.0, 4.0]), 0.0, np.zeros(4))
    np.testing.assert_array_equal(y, [0.0, 0.0, 0.0, 5.0])


def test_spmv_alpha_beta_and_no_mutation():
    A = SparseMatrix.from_dense(tridiag(3))
    x = np.array([1.0, 1.0, 1.0])
    y = np.array([10.0, 20.0, 30.0])
    y0 = y.copy()
    out = spmv(2.0, A, x, -1.0, y)
    np.testing.assert_allclose(out, 2.0 * (tridiag(3) @ x) - y0)
    np.testing.assert_array_equal(y, y0)


def test_spmv_empty_matrix():
    A = SparseMatrix.from_coo(3, 3, [], [], [])
    y = spmv(1.0, A, np.ones(3), 0.5, np.ones(3))
    np.testing.assert_array_equal(y, [0.5, 0.5, 0.5])


def test_spmv_dimension_errors():
    A = SparseMatrix.identity(3)
    with pytest.raises(DimensionError):
        spmv(1.0, A, np.ones(4), 0.0, np.ones(3))
    with pytest.raises(DimensionError):
        spmv(1.0, A, np.ones(3), 0.0, np.ones(2))


def test_spmv_against_dense_oracle():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n, m = rng.integers(1, 50, 2)
        dense = rng.standard_normal((n, m)) * (rng.random((n, m)) < 0.35)
        A = SparseMatrix.from_dense(dense)
        x = rng.standard_normal(m)
        y = rng.standard_normal(n)
        expect = 1.7 * dense @ x + 0.3 * y
        got = spmv(1.7, A, x, 0.3, y)
        assert np.linalg.norm(got - expect) <= 1e-13 * max(1.0, np.linalg.norm(expect))


def test_spmv_deterministic_bitwise():
    rng = np.random.default_rng(7)
    dense = rng.standard_normal((80, 80)) * (rng.random((80, 80)) < 0.2)
    A = SparseMatrix.from_dense(dense)
    x = rng.standard_normal(80)
    a = spmv(1.0, A, x, 0.0, np.zeros(80))
    b = spmv(1.0, A, x, 0.0, np.zeros(80))
    assert np.array_equal(a, b)


# -- transpose ---------------------------------------------------------------


def test_transpose_is_exact_involution():
    rng = np.random.default_rng(3)
    dense = rng.standard_normal((9, 13)) * (rng.random((9, 13)) < 0.4)
    A = SparseMatrix.from_dense(dense)
    T = transpose(A)
    T.validate()
    np.testing.assert_array_equal(T.to_dense(), dense.T)
    TT = transpose(T)
    # bitwise round trip
    assert np.array_equal(TT.row_ptr, A.row_ptr)
    assert np.array_equal(TT.col_idx, A.col_idx)
    assert np.array_equal(TT.values, A.values)


def test_transpose_single_row():
    A = SparseMatrix.from_coo(1, 5, [0, 0], [1, 4], [2.0, 3.0])
    T = transpose(A)
    assert (T.nrows, T.ncols) == (5, 1)
    np.testing.assert_array_equal(T.to_dense().ravel(), [0.0, 2.0, 0.0, 0.0, 3.0])


# -- spgemm ------------------------------------------------------------------


def test_spgemm_hand_value_deflation_basis():
    # tridiag(4) times the piecewise-constant basis of two 2-unknown subdomains
    A = SparseMatrix.from_dense(tridiag(4))
    Z = SparseMatrix.from_dense(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]))
    AZ = spgemm(A, Z)
    np.testing.assert_array_equal(
        AZ.to_dense(), [[1.0, 0.0], [1.0, -1.0], [-1.0, 1.0], [0.0, 1.0]]
    )
    E = spgemm(transpose(Z), AZ)
    np.testing.assert_array_equal(E.to_dense(), [[2.0, -1.0], [-1.0, 2.0]])


def test_spgemm_identity_is_bitwise_noop():
    rng = np.random.default_rng(11)
    dense = rng.standard_normal((20, 20)) * (rng.random((20, 20)) < 0.3)
    A = SparseMatrix.from_dense(dense)
    C = spgemm(A, SparseMatrix.identity(20))
    assert np.array_equal(C.row_ptr, A.row_ptr)
    assert np.array_equal(C.col_idx, A.col_idx)
    assert np.array_equal(C.values, A.values)


def test_spgemm_exact_cancellation():
    # contributions cancel exactly; the stored entry may be an explicit zero
    A = SparseMatrix.from_dense(np.array([[1.0, -1.0]]))
    B = SparseMatrix.from_dense(np.array([[1.0], [1.0]]))
    C = spgemm(A, B)
    np.testing.assert_array_equal(C.to_dense(), [[0.0]])


def test_spgemm_dimension_mismatch():
    with pytest.raises(DimensionError):
        spgemm(SparseMatrix.identity(3), SparseMatrix.identity(4))


def test_spgemm_against_dense_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n, m, k = rng.integers(1, 30, 3)
        a = rng.standard_normal((n, m)) * (rng.random((n, m)) < 0.3)
        b = rng.standard_normal((m, k)) * (rng.random((m, k)) < 0.3)
        C = spgemm(SparseMatrix.from_dense(a), SparseMatrix.from_dense(b))
        C.validate()
        expect = a @ b
        scale = max(1.0, np.abs(expect).max())
        assert np.abs(C.to_dense() - expect).max() <= 1e-13 * scale


# -- dense LU ----------------------------------------------------------------


def test_dense_lu_hand_value():
    f = dense_lu(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    np.testing.assert_allclose(f.solve(np.array([1.0, 1.0])), [1.0, 1.0], atol=1e-14)


def test_dense_lu_left_inverse_property():
    rng = np.random.default_rng(9)
    for n in (1, 5, 40, 100):
        a = rng.standard_normal((n, n)) + n * np.eye(n)
        f = dense_lu(a)
        recon = a @ f.solve(np.eye(n))
        assert np.abs(recon - np.eye(n)).max() <= 1e-12


def test_dense_lu_singular_raises():
    with pytest.raises(SingularMatrixError):
        dense_lu(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularMatrixError):
        dense_lu(np.zeros((3, 3)))


def test_dense_lu_nonsquare_raises():
    with pytest.raises(DimensionError):
        dense_lu(np.ones((2, 3)))


def test_dense_lu_solve_is_reusable():
    a = np.array([[4.0, 1.0], [1.0, 3.0]])
    f = dense_lu(a)
    b1 = np.array([1.0, 0.0])
    b2 = np.array([0.0, 1.0])
    x1 = f.solve(b1)
    x2 = f.solve(b2)
    np.testing.assert_allclose(a @ x1, b1, atol=1e-14)
    np.testing.assert_allclose(a @ x2, b2, atol=1e-14)
    assert isinstance(f, LuFactorization)


def test_dense_lu_multiple_rhs_columns():
    a = np.array([[2.0, 0.0], [0.0, 4.0]])
    f = dense_lu(a)
    np.testing.assert_allclose(f.solve(np.eye(2)), np.diag([0.5, 0.25]), atol=1e-15)
