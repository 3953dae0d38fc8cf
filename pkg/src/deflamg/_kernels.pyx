# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR hot kernels; call surface mirrors ``deflamg._kernels_py``."""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def spmv_rows(const int64_t[::1] indptr, const int64_t[::1] indices,
              const double[::1] data, const double[::1] x, double[::1] out,
              Py_ssize_t start, Py_ssize_t end):
    """out[start:end] = (A @ x)[start:end]; rows outside the range untouched."""
    cdef Py_ssize_t i
    cdef int64_t jj
    cdef double acc
    with nogil:
        for i in range(start, end):
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc = acc + data[jj] * x[indices[jj]]
            out[i] = acc


def transpose(Py_ssize_t nrows, Py_ssize_t ncols, const int64_t[::1] indptr,
              const int64_t[::1] indices, const double[::1] data):
    """Exact CSR transpose via counting sort; output columns sorted per row."""
    cdef Py_ssize_t nnz = indices.shape[0]
    indptr_t_arr = np.zeros(ncols + 1, dtype=np.int64)
    indices_t_arr = np.empty(nnz, dtype=np.int64)
    data_t_arr = np.empty(nnz, dtype=np.float64)
    next_arr = np.empty(ncols, dtype=np.int64)
    cdef int64_t[::1] indptr_t = indptr_t_arr
    cdef int64_t[::1] indices_t = indices_t_arr
    cdef double[::1] data_t = data_t_arr
    cdef int64_t[::1] next_slot = next_arr
    cdef Py_ssize_t i, c
    cdef int64_t jj, dest
    with nogil:
        for jj in range(nnz):
            indptr_t[indices[jj] + 1] += 1
        for c in range(ncols):
            indptr_t[c + 1] += indptr_t[c]
            next_slot[c] = indptr_t[c]
        for i in range(nrows):
            for jj in range(indptr[i], indptr[i + 1]):
                dest = next_slot[indices[jj]]
                indices_t[dest] = i
                data_t[dest] = data[jj]
                next_slot[indices[jj]] = dest + 1
    return indptr_t_arr, indices_t_arr, data_t_arr


def spgemm(Py_ssize_t a_nrows, const int64_t[::1] a_indptr, const int64_t[::1] a_indices,
           const double[::1] a_data, Py_ssize_t b_ncols, const int64_t[::1] b_indptr,
           const int64_t[::1] b_indices, const double[::1] b_data):
    """CSR product C = A @ B (Gustavson, two passes, per-row insertion sort)."""
    cdef Py_ssize_t i
    cdef int64_t jj, kk, k, j, count, row_start, nnz_row, p, q, key
    cdef double v

    marker_arr = np.full(b_ncols, -1, dtype=np.int64)
    c_indptr_arr = np.zeros(a_nrows + 1, dtype=np.int64)
    cdef int64_t[::1] marker = marker_arr
    cdef int64_t[::1] c_indptr = c_indptr_arr

    with nogil:
        for i in range(a_nrows):
            count = 0
            for jj in range(a_indptr[i], a_indptr[i + 1]):
                k = a_indices[jj]
                for kk in range(b_indptr[k], b_indptr[k + 1]):
                    j = b_indices[kk]
                    if marker[j] != i:
                        marker[j] = i
                        count += 1
            c_indptr[i + 1] = c_indptr[i] + count

    cdef int64_t nnz_total = c_indptr[a_nrows]
    c_indices_arr = np.empty(nnz_total, dtype=np.int64)
    c_data_arr = np.empty(nnz_total, dtype=np.float64)
    sums_arr = np.zeros(b_ncols, dtype=np.float64)
    marker2_arr = np.full(b_ncols, -1, dtype=np.int64)
    cdef int64_t[::1] c_indices = c_indices_arr
    cdef double[::1] c_data = c_data_arr
    cdef double[::1] sums = sums_arr
    cdef int64_t[::1] marker2 = marker2_arr

    with nogil:
        for i in range(a_nrows):
            row_start = c_indptr[i]
            nnz_row = 0
            for jj in range(a_indptr[i], a_indptr[i + 1]):
                k = a_indices[jj]
                v = a_data[jj]
                for kk in range(b_indptr[k], b_indptr[k + 1]):
                    j = b_indices[kk]
                    sums[j] += v * b_data[kk]
                    if marker2[j] != i:
                        marker2[j] = i
                        c_indices[row_start + nnz_row] = j
                        nnz_row += 1
            for p in range(1, nnz_row):
                key = c_indices[row_start + p]
                q = p - 1
                while q >= 0 and c_indices[row_start + q] > key:
                    c_indices[row_start + q + 1] = c_indices[row_start + q]
                    q -= 1
                c_indices[row_start + q + 1] = key
            for p in range(nnz_row):
                j = c_indices[row_start + p]
                c_data[row_start + p] = sums[j]
                sums[j] = 0.0
    return c_indptr_arr, c_indices_arr, c_data_arr


def gauss_seidel(const int64_t[::1] indptr, const int64_t[::1] indices,
                 const double[::1] data, const double[::1] rhs, double[::1] z):
    """One forward Gauss-Seidel sweep on A z = rhs from z = 0, in place.

    Caller guarantees every diagonal entry is present and nonzero; columns
    j > i contribute nothing because the initial guess is zero.
    """
    cdef Py_ssize_t n = rhs.shape[0]
    cdef Py_ssize_t i
    cdef int64_t jj, j
    cdef double acc, diag
    with nogil:
        for i in range(n):
            acc = rhs[i]
            diag = 1.0
            for jj in range(indptr[i], indptr[i + 1]):
                j = indices[jj]
                if j < i:
                    acc -= data[jj] * z[j]
                elif j == i:
                    diag = data[jj]
            z[i] = acc / diag
