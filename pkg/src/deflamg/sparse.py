"""CSR matrices, dense LU, and the sparse primitives everything else builds on.

Conventions used throughout the package:

* sparse matrices are CSR with int64 ``row_ptr``/``col_idx`` and float64
  ``values``; column indices are sorted and unique within each row; instances
  are frozen after construction and safe to share between threads;
* dense matrices are plain 2-D float64 numpy arrays (row-major);
* vectors are 1-D float64 numpy arrays.

All results are deterministic: summation orders are fixed by the kernel
backends and never depend on thread scheduling.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .backend import kernels
from .errors import DimensionError, SingularMatrixError, StructureError

__all__ = [
    "SparseMatrix",
    "LuFactorization",
    "spmv",
    "transpose",
    "spgemm",
    "dense_lu",
    "matvec",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _index_array(a) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.int64)
    return out


def _value_array(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix."""

    nrows: int
    ncols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", _freeze(_index_array(self.row_ptr)))
        object.__setattr__(self, "col_idx", _freeze(_index_array(self.col_idx)))
        object.__setattr__(self, "values", _freeze(_value_array(self.values)))
        if self.row_ptr.shape != (self.nrows + 1,):
            raise StructureError(
                f"row_ptr has length {self.row_ptr.shape[0]}, expected {self.nrows + 1}"
            )
        if self.col_idx.shape != self.values.shape:
            raise StructureError("col_idx and values lengths differ")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.col_idx.shape[0]:
            raise StructureError("row_ptr does not span the nonzero arrays")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triplets; duplicate entries are summed."""
        rows = _index_array(rows)
        cols = _index_array(cols)
        vals = _value_array(vals)
        if not (rows.shape == cols.shape == vals.shape):
            raise DimensionError("coordinate arrays must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= nrows:
                raise StructureError("row index out of bounds")
            if cols.min() < 0 or cols.max() >= ncols:
                raise StructureError("column index out of bounds")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            head = np.empty(rows.size, dtype=bool)
            head[0] = True
            head[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(head)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        row_ptr = np.zeros(nrows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=nrows).astype(np.int64), out=row_ptr[1:])
        return cls(nrows, ncols, row_ptr, cols, vals)

    @classmethod
    def from_dense(cls, a, tol: float = 0.0) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError("expected a 2-D array")
        rows, cols = np.nonzero(np.abs(a) > tol)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    # -- inspection ---------------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.col_idx.shape[0])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_ptr))
        out[rows, self.col_idx] = self.values
        return out

    def diagonal(self) -> np.ndarray:
        """Entries a_ii (zero where the entry is absent)."""
        rows = np.repeat(np.arange(self.nrows, dtype=np.int64), np.diff(self.row_ptr))
        on_diag = self.col_idx == rows
        d = np.zeros(self.nrows)
        d[rows[on_diag]] = self.values[on_diag]
        return d

    def validate(self) -> None:
        """Raise StructureError if any CSR invariant is violated."""
        if np.any(np.diff(self.row_ptr) < 0):
            raise StructureError("row_ptr is not monotone")
        if self.nnz:
            if self.col_idx.min() < 0 or self.col_idx.max() >= self.ncols:
                raise StructureError("column index out of bounds")
            interior = np.ones(self.nnz, dtype=bool)
            starts = self.row_ptr[1:-1]
            interior[starts[starts < self.nnz]] = False  # first entry of each row exempt
            if np.any(np.diff(self.col_idx)[interior[1:]] <= 0):
                raise StructureError("columns not strictly increasing within a row")

    # -- algebra ------------------------------------------------------------

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return matvec(self, x)


def require_nonzero_diagonal(A: SparseMatrix, what: str = "matrix") -> np.ndarray:
    """Return diag(A), raising StructureError on a missing or zero entry."""
    if A.nrows != A.ncols:
        raise DimensionError(f"{what} must be square, got {A.nrows}x{A.ncols}")
    d = A.diagonal()
    bad = np.flatnonzero(d == 0.0)
    if bad.size:
        raise StructureError(f"{what} has zero/missing diagonal at row {int(bad[0])}")
    return d


def matvec(A: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """Plain A @ x (no dimension-checked alpha/beta frills)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (A.ncols,):
        raise DimensionError(f"operand has length {x.shape}, expected ({A.ncols},)")
    out = np.empty(A.nrows)
    kernels.spmv_rows(A.row_ptr, A.col_idx, A.values, x, out, 0, A.nrows)
    return out


def matvec_rows(A: SparseMatrix, x: np.ndarray, out: np.ndarray, start: int, end: int) -> None:
    """Unchecked row-range matvec used by the threaded distributed layer."""
    kernels.spmv_rows(A.row_ptr, A.col_idx, A.values, x, out, start, end)


def spmv(alpha: float, A: SparseMatrix, x: np.ndarray, beta: float, y: np.ndarray) -> np.ndarray:
    """Return alpha * A @ x + beta * y without mutating y."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.nrows,):
        raise DimensionError(f"y has shape {y.shape}, expected ({A.nrows},)")
    out = matvec(A, x)
    if alpha != 1.0:
        out *= alpha
    if beta != 0.0:
        out += beta * y
    return out


def transpose(A: SparseMatrix) -> SparseMatrix:
    """Exact transpose (values are copied bit-for-bit, no arithmetic)."""
    ptr, idx, vals = kernels.transpose(A.nrows, A.ncols, A.row_ptr, A.col_idx, A.values)
    return SparseMatrix(A.ncols, A.nrows, ptr, idx, vals)


def spgemm(A: SparseMatrix, B: SparseMatrix) -> SparseMatrix:
    """Sparse product A @ B."""
    if A.ncols != B.nrows:
        raise DimensionError(f"inner dimensions differ: {A.ncols} vs {B.nrows}")
    ptr, idx, vals = kernels.spgemm(
        A.nrows, A.row_ptr, A.col_idx, A.values, B.ncols, B.row_ptr, B.col_idx, B.values
    )
    return SparseMatrix(A.nrows, B.ncols, ptr, idx, vals)


@dataclass(frozen=True)
class LuFactorization:
    """Pivoted dense LU; solve() is reusable and does not modify the factors."""

    lu: np.ndarray
    piv: np.ndarray

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.lu.shape[0]:
            raise DimensionError(
                f"right-hand side has length {b.shape[0]}, expected {self.lu.shape[0]}"
            )
        if self.lu.shape[0] == 0:
            return np.zeros_like(b)
        return scipy.linalg.lu_solve((self.lu, self.piv), b, check_finite=False)


def dense_lu(a: np.ndarray) -> LuFactorization:
    """Factorize a square dense matrix; raises SingularMatrixError on a dead pivot."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return LuFactorization(np.zeros((0, 0)), np.zeros(0, dtype=np.int32))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # we do our own singularity check
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    d = np.abs(np.diag(lu))
    scale = max(d.max(), 1e-300)
    if not np.all(np.isfinite(lu)) or d.min() <= 1e-14 * scale:
        raise SingularMatrixError(
            f"matrix is singular to working precision (pivot ratio {d.min() / scale:.2e})"
        )
    lu.flags.writeable = False
    piv.flags.writeable = False
    return LuFactorization(lu, piv)
