"""Smoothed-aggregation algebraic multigrid.

Setup builds a hierarchy by greedy distance-2 aggregation of the strength
graph, smooths the piecewise-constant tentative prolongation with one damped
Jacobi step, and forms coarse operators as the Galerkin triple product
``P^T (A P)``. The solve side is a V(1,1) cycle with a pluggable relaxation
(damped Jacobi, SPAI-0, or forward Gauss-Seidel); the whole cycle is a fixed
linear operator, so it is safe inside non-flexible Krylov methods.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import StructureError
from .sparse import (
    LuFactorization,
    SparseMatrix,
    dense_lu,
    matvec,
    require_nonzero_diagonal,
    spgemm,
    transpose,
)

__all__ = [
    "AmgOptions",
    "AmgLevel",
    "AmgHierarchy",
    "strength_filter",
    "aggregate",
    "tentative_prolongation",
    "smooth_prolongation",
    "spai0_weights",
    "build_hierarchy",
]

RELAX_KINDS = ("damped_jacobi", "spai0", "gauss_seidel")


@dataclass(frozen=True)
class AmgOptions:
    eps_strong: float = 0.08
    omega: float = 2.0 / 3.0
    relax_type: str = "damped_jacobi"
    damping: float = 0.8
    coarse_enough: int = 500
    max_levels: int = 25

    def __post_init__(self):
        if self.relax_type not in RELAX_KINDS:
            raise StructureError(
                f"unknown relaxation '{self.relax_type}', expected one of {RELAX_KINDS}"
            )

    @classmethod
    def from_config(cls, cfg, coarse_enough=None) -> "AmgOptions":
        """Read the preconditioner section of a SolverConfig."""
        return cls(
            eps_strong=cfg.get("precond.coarsening.eps_strong"),
            omega=cfg.get("precond.coarsening.omega"),
            relax_type=cfg.get("precond.relax.type"),
            damping=cfg.get("precond.relax.damping"),
            coarse_enough=cfg.get("precond.coarse_enough") if coarse_enough is None else coarse_enough,
        )


def strength_filter(A: SparseMatrix, eps: float) -> SparseMatrix:
    """Drop weak couplings: keep a_ij with |a_ij| > eps*sqrt(|a_ii*a_jj|).

    Diagonal entries are always kept; a zero diagonal is rejected because the
    scaling (and every relaxation here) needs it.
    """
    diag = require_nonzero_diagonal(A, "strength graph")
    counts = np.diff(A.row_ptr)
    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), counts)
    cols = A.col_idx
    absd = np.abs(diag)
    keep = (cols == rows) | (
        np.abs(A.values) > eps * np.sqrt(absd[rows] * absd[cols])
    )
    return SparseMatrix.from_coo(A.nrows, A.ncols, rows[keep], cols[keep], A.values[keep])


def aggregate(S: SparseMatrix):
    """Greedy distance-2 aggregation over a strength-filtered matrix.

    Nodes are visited in ascending order. An unaggregated node roots a new
    aggregate when it still has a free strong neighbor, or when none of its
    neighbors has been taken yet; the root absorbs its free strong neighbors
    and, through them, their free strong neighbors. Whatever remains joins
    the aggregate of its lowest-numbered strong neighbor.

    Returns (labels, n_aggregates); labels is dense int64 with no -1 left.
    """
    n = S.nrows
    labels = np.full(n, -1, dtype=np.int64)
    row_ptr, col_idx = S.row_ptr, S.col_idx
    naggr = 0
    for i in range(n):
        if labels[i] != -1:
            continue
        nbrs = col_idx[row_ptr[i] : row_ptr[i + 1]]
        nbrs = nbrs[nbrs != i]
        free = nbrs[labels[nbrs] == -1]
        if free.shape[0] == 0 and nbrs.shape[0] != 0:
            continue  # everything around is taken; resolved in the second pass
        a = naggr
        naggr += 1
        labels[i] = a
        labels[free] = a
        for j in free:
            second = col_idx[row_ptr[j] : row_ptr[j + 1]]
            second = second[labels[second] == -1]
            labels[second] = a
    for i in range(n):
        if labels[i] != -1:
            continue
        nbrs = col_idx[row_ptr[i] : row_ptr[i + 1]]
        nbrs = nbrs[nbrs != i]
        taken = nbrs[labels[nbrs] != -1]
        labels[i] = labels[taken[0]]
    return labels, naggr


def tentative_prolongation(labels: np.ndarray, naggr: int) -> SparseMatrix:
    """Piecewise-constant interpolation: row i has a single 1 in column labels[i]."""
    n = labels.shape[0]
    return SparseMatrix.from_coo(
        n, naggr, np.arange(n, dtype=np.int64), labels, np.ones(n)
    )


def smooth_prolongation(
    A: SparseMatrix, A_filtered: SparseMatrix, P_tent: SparseMatrix, omega: float
) -> SparseMatrix:
    """One damped-Jacobi smoothing step: P = (I - omega*D^-1*A_f) P_tent.

    D is the diagonal of the unfiltered operator; A_f is the strength-filtered
    operator (its diagonal is kept by construction).
    """
    diag = require_nonzero_diagonal(A, "prolongation smoothing")
    AP = spgemm(A_filtered, P_tent)
    counts = np.diff(AP.row_ptr)
    rows = np.repeat(np.arange(AP.nrows, dtype=np.int64), counts)
    scaled = -(omega / diag)[rows] * AP.values
    counts_t = np.diff(P_tent.row_ptr)
    rows_t = np.repeat(np.arange(P_tent.nrows, dtype=np.int64), counts_t)
    return SparseMatrix.from_coo(
        P_tent.nrows,
        P_tent.ncols,
        np.concatenate((rows_t, rows)),
        np.concatenate((P_tent.col_idx, AP.col_idx)),
        np.concatenate((P_tent.values, scaled)),
    )


def spai0_weights(A: SparseMatrix) -> np.ndarray:
    """Diagonal sparse-approximate-inverse weights m_i = a_ii / sum_j a_ij^2."""
    diag = require_nonzero_diagonal(A, "SPAI-0 relaxation")
    counts = np.diff(A.row_ptr)
    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), counts)
    sq = np.bincount(rows, weights=A.values * A.values, minlength=A.nrows)
    return diag / sq


@dataclass
class AmgLevel:
    matrix: SparseMatrix
    prolongation: SparseMatrix | None = None
    restriction: SparseMatrix | None = None
    inv_diag: np.ndarray | None = None
    spai_weights: np.ndarray | None = None
    lu: LuFactorization | None = None


class AmgHierarchy:
    """Setup product: the level stack plus the relaxation choice."""

    def __init__(self, levels: list, options: AmgOptions):
        self.levels = levels
        self.options = options

    @property
    def level_sizes(self) -> list:
        return [lev.matrix.nrows for lev in self.levels]

    def _relax(self, lev: AmgLevel, r: np.ndarray) -> np.ndarray:
        kind = self.options.relax_type
        if kind == "damped_jacobi":
            return self.options.damping * lev.inv_diag * r
        if kind == "spai0":
            return lev.spai_weights * r
        z = np.zeros_like(r)
        M = lev.matrix
        kernels.gauss_seidel(M.row_ptr, M.col_idx, M.values, r, z)
        return z

    def _cycle(self, l: int, r: np.ndarray) -> np.ndarray:
        lev = self.levels[l]
        if lev.lu is not None:
            return lev.lu.solve(r)
        x = self._relax(lev, r)
        coarse_r = matvec(lev.restriction, r - matvec(lev.matrix, x))
        x = x + matvec(lev.prolongation, self._cycle(l + 1, coarse_r))
        return x + self._relax(lev, r - matvec(lev.matrix, x))

    def apply(self, r: np.ndarray) -> np.ndarray:
        """One V(1,1) cycle from a zero initial guess; linear in r."""
        return self._cycle(0, r)

    __call__ = apply


def build_hierarchy(A: SparseMatrix, options: AmgOptions | None = None) -> AmgHierarchy:
    """Coarsen until the operator is small enough for a dense factorization.

    The strength threshold is halved on every level. If aggregation fails to
    coarsen (as many aggregates as nodes -- e.g. a diagonal matrix), the level
    is closed out with a direct factorization instead.
    """
    opts = options or AmgOptions()
    levels = []
    current = A
    level_index = 0
    while True:
        if current.nrows <= opts.coarse_enough or level_index + 1 >= opts.max_levels:
            levels.append(AmgLevel(matrix=current, lu=dense_lu(current.to_dense())))
            break
        eps = opts.eps_strong * (0.5**level_index)
        filtered = strength_filter(current, eps)
        labels, naggr = aggregate(filtered)
        if naggr == current.nrows:
            levels.append(AmgLevel(matrix=current, lu=dense_lu(current.to_dense())))
            break
        P = smooth_prolongation(current, filtered, tentative_prolongation(labels, naggr), opts.omega)
        R = transpose(P)
        lev = AmgLevel(matrix=current, prolongation=P, restriction=R)
        if opts.relax_type == "damped_jacobi":
            lev.inv_diag = 1.0 / require_nonzero_diagonal(current, "Jacobi relaxation")
        elif opts.relax_type == "spai0":
            lev.spai_weights = spai0_weights(current)
        else:
            require_nonzero_diagonal(current, "Gauss-Seidel relaxation")
        levels.append(lev)
        current = spgemm(R, spgemm(current, P))
        level_index += 1
    return AmgHierarchy(levels, opts)
