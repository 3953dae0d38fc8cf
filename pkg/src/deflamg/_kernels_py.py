"""Numpy fallback implementations of the CSR hot kernels.

Same call surface as the compiled extension ``deflamg._kernels``; selected by
``deflamg.backend`` when the extension is unavailable (or forced via the
``DEFLAMG_KERNELS`` environment variable). All functions assume validated CSR
input: int64 index arrays, float64 values, sorted unique columns per row.
"""
import numpy as np


def spmv_rows(indptr, indices, data, x, out, start, end):
    """out[start:end] = (A @ x)[start:end]; rows outside the range untouched."""
    lo = int(indptr[start])
    hi = int(indptr[end])
    if hi == lo:
        out[start:end] = 0.0
        return
    prod = data[lo:hi] * x[indices[lo:hi]]
    counts = np.diff(indptr[start : end + 1])
    rows = np.repeat(np.arange(end - start, dtype=np.int64), counts)
    # bincount accumulates sequentially in input order, i.e. in CSR order per
    # row -- the same summation order as the compiled kernel.
    out[start:end] = np.bincount(rows, weights=prod, minlength=end - start)


def transpose(nrows, ncols, indptr, indices, data):
    """Exact CSR transpose; output rows come out with sorted, unique columns."""
    counts = np.bincount(indices, minlength=ncols).astype(np.int64)
    indptr_t = np.zeros(ncols + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr_t[1:])
    # stable sort keeps ascending row order within each output row
    perm = np.argsort(indices, kind="stable")
    rows = np.repeat(np.arange(nrows, dtype=np.int64), np.diff(indptr))
    return indptr_t, rows[perm], data[perm].copy()


def spgemm(a_nrows, a_indptr, a_indices, a_data, b_ncols, b_indptr, b_indices, b_data):
    """CSR product C = A @ B via expand / lexsort / segment-sum."""
    bl = b_indptr[a_indices]
    ecount = (b_indptr[a_indices + 1] - bl).astype(np.int64)
    total = int(ecount.sum())
    if total == 0:
        return (
            np.zeros(a_nrows + 1, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.float64),
        )
    offsets = np.concatenate(([0], np.cumsum(ecount)[:-1]))
    pos = np.arange(total, dtype=np.int64) - np.repeat(offsets, ecount) + np.repeat(bl, ecount)
    cols = b_indices[pos]
    vals = np.repeat(a_data, ecount) * b_data[pos]
    a_rows = np.repeat(np.arange(a_nrows, dtype=np.int64), np.diff(a_indptr))
    rows = np.repeat(a_rows, ecount)

    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    vals = vals[order]

    head = np.empty(total, dtype=bool)
    head[0] = True
    head[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    starts = np.flatnonzero(head)

    c_data = np.add.reduceat(vals, starts)
    c_indices = cols[starts]
    c_indptr = np.zeros(a_nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows[starts], minlength=a_nrows).astype(np.int64), out=c_indptr[1:])
    return c_indptr, c_indices, c_data


def gauss_seidel(indptr, indices, data, rhs, z):
    """One forward Gauss-Seidel sweep on A z = rhs starting from z = 0.

    Caller guarantees every diagonal entry is present and nonzero. Because the
    initial guess is zero, columns j > i contribute nothing.
    """
    n = rhs.shape[0]
    for i in range(n):
        lo = int(indptr[i])
        hi = int(indptr[i + 1])
        cols = indices[lo:hi]
        vals = data[lo:hi]
        dpos = int(np.searchsorted(cols, i))
        left = dpos  # columns are sorted, so cols[:dpos] < i
        acc = rhs[i] - np.dot(vals[:left], z[cols[:left]])
        z[i] = acc / vals[dpos]
