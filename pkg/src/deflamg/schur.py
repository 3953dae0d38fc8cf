"""Pressure-Schur-complement block solver for saddle-point systems.

A monolithic matrix whose unknowns mix velocity- and pressure-like fields is
split by a boolean *pressure mask* into the 2x2 block form

    [ K  G ] [ u ]   [ b_u ]
    [ D  S ] [ p ] = [ b_p ]

(mask false -> velocity, mask true -> pressure, original ordering preserved
inside each field). The system is solved by an outer flexible GMRES whose
right preconditioner performs one pressure-correction sweep:

1. inexact velocity solve        K u^ = b_u            (SPAI-0 + GMRES),
2. inexact matrix-free solve    (S - D diag(K)^-1 G) p = b_p - D u^
   (deflation + block AMG built on S, flexible GMRES),
3. the velocity solve repeated with the updated pressure, b_u - G p.

The inner solves run with loose tolerances and hard iteration caps; not
converging inside them is expected and never aborts the outer iteration.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .amg import spai0_weights
from .config import SolverConfig
from .deflation import DeflatedSolver
from .errors import ConfigError, DimensionError
from .krylov import LinearOperator, fgmres, get_solver
from .runtime import Partition, partition_contiguous
from .sparse import SparseMatrix, matvec, require_nonzero_diagonal

__all__ = [
    "BlockSystem",
    "split_blocks",
    "reassemble",
    "schur_operator",
    "SchurPreconditioner",
    "apply_schur_preconditioner",
    "SchurSolver",
    "solve_block_system",
]


@dataclass(frozen=True)
class BlockSystem:
    """The four explicitly assembled blocks of a masked saddle-point matrix."""

    K: SparseMatrix
    G: SparseMatrix
    D: SparseMatrix
    S: SparseMatrix
    pressure_mask: np.ndarray
    invKdiag: np.ndarray

    @property
    def n(self) -> int:
        return self.pressure_mask.shape[0]

    @property
    def n_velocity(self) -> int:
        return self.K.nrows

    @property
    def n_pressure(self) -> int:
        return self.S.nrows

    def split(self, x: np.ndarray):
        """Global vector -> (velocity part, pressure part)."""
        return x[~self.pressure_mask], x[self.pressure_mask]

    def merge(self, u: np.ndarray, p: np.ndarray) -> np.ndarray:
        """(velocity part, pressure part) -> global vector."""
        x = np.empty(self.n)
        x[~self.pressure_mask] = u
        x[self.pressure_mask] = p
        return x


def split_blocks(A: SparseMatrix, pressure_mask) -> BlockSystem:
    """Extract K, G, D, S from a monolithic matrix by the pressure mask.

    Rows/columns keep their relative order inside each field, so
    ``reassemble(split_blocks(A, mask))`` reproduces A exactly.
    """
    if A.nrows != A.ncols:
        raise DimensionError(f"matrix must be square, got {A.nrows}x{A.ncols}")
    mask = np.asarray(pressure_mask, dtype=bool)
    if mask.shape != (A.nrows,):
        raise DimensionError(
            f"pressure mask has length {mask.shape}, expected ({A.nrows},)"
        )
    local = np.empty(A.nrows, dtype=np.int64)
    local[~mask] = np.arange(int(np.count_nonzero(~mask)))
    local[mask] = np.arange(int(np.count_nonzero(mask)))
    n_u = int(np.count_nonzero(~mask))
    n_p = A.nrows - n_u

    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), np.diff(A.row_ptr))
    cols = A.col_idx
    row_p = mask[rows]
    col_p = mask[cols]

    def block(nr, nc, keep):
        return SparseMatrix.from_coo(
            nr, nc, local[rows[keep]], local[cols[keep]], A.values[keep]
        )

    K = block(n_u, n_u, ~row_p & ~col_p)
    G = block(n_u, n_p, ~row_p & col_p)
    D = block(n_p, n_u, row_p & ~col_p)
    S = block(n_p, n_p, row_p & col_p)
    inv_kdiag = 1.0 / require_nonzero_diagonal(K, "velocity block K")
    mask.flags.writeable = False
    inv_kdiag.flags.writeable = False
    return BlockSystem(K, G, D, S, mask, inv_kdiag)


def reassemble(B: BlockSystem) -> SparseMatrix:
    """Inverse of split_blocks (exact: values are moved, never recomputed)."""
    mask = B.pressure_mask
    u_idx = np.flatnonzero(~mask)
    p_idx = np.flatnonzero(mask)
    rows, cols, vals = [], [], []
    for M, rmap, cmap in (
        (B.K, u_idx, u_idx),
        (B.G, u_idx, p_idx),
        (B.D, p_idx, u_idx),
        (B.S, p_idx, p_idx),
    ):
        r = np.repeat(np.arange(M.nrows, dtype=np.int64), np.diff(M.row_ptr))
        rows.append(rmap[r])
        cols.append(cmap[M.col_idx])
        vals.append(M.values)
    n = mask.shape[0]
    return SparseMatrix.from_coo(
        n, n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )


def schur_operator(B: BlockSystem) -> LinearOperator:
    """Matrix-free approximate pressure Schur complement S - D diag(K)^-1 G."""
    K_diag_inv = B.invKdiag

    def apply(p: np.ndarray) -> np.ndarray:
        return matvec(B.S, p) - matvec(B.D, K_diag_inv * matvec(B.G, p))

    return LinearOperator(B.n_pressure, apply)


def _pressure_config(cfg: SolverConfig) -> SolverConfig:
    """Project the psolver keys onto a standalone deflated-solver config."""
    return SolverConfig(
        {
            "precond": {
                "coarse_enough": cfg.get("precond.psolver.local.coarse_enough"),
                "coarsening": {
                    "type": cfg.get("precond.coarsening.type"),
                    "eps_strong": cfg.get("precond.coarsening.eps_strong"),
                    "omega": cfg.get("precond.coarsening.omega"),
                },
                "relax": {
                    "type": cfg.get("precond.relax.type"),
                    "damping": cfg.get("precond.relax.damping"),
                },
            },
            "deflation": {"kind": cfg.get("precond.psolver.deflation.kind")},
        }
    )


class SchurPreconditioner:
    """The three-step velocity/pressure sweep, built once and applied per
    outer iteration. Cumulative inner iteration counts are kept for
    reporting; inner non-convergence is by design and never raised."""

    def __init__(
        self,
        B: BlockSystem,
        config: SolverConfig | None = None,
        *,
        pressure_partition: Partition | None = None,
        pressure_coords: np.ndarray | None = None,
        threads_per_subdomain: int = 1,
    ):
        cfg = config or SolverConfig()
        self.B = B
        self.velocity_iterations = 0
        self.pressure_iterations = 0

        self._usolve = get_solver(cfg.get("precond.usolver.solver.type"))
        self._ukwargs = {
            "tol": cfg.get("precond.usolver.solver.tol"),
            "maxiter": cfg.get("precond.usolver.solver.maxiter"),
        }
        if B.n_velocity:
            w = spai0_weights(B.K)
            self._ukwargs["M"] = lambda r: w * r
            self._op_K = LinearOperator.from_matrix(B.K)

        if B.n_pressure:
            if pressure_partition is None:
                pressure_partition = partition_contiguous(B.n_pressure, 1)
            # Block AMG + deflation basis on the assembled S block; the
            # iterative solve below targets the matrix-free Schur operator.
            self._pressure = DeflatedSolver(
                B.S,
                pressure_partition,
                config=_pressure_config(cfg),
                coords=pressure_coords,
                threads_per_subdomain=threads_per_subdomain,
            )
            self._psolve = get_solver(cfg.get("precond.psolver.isolver.type"))
            self._pkwargs = {
                "tol": cfg.get("precond.psolver.isolver.tol"),
                "maxiter": cfg.get("precond.psolver.isolver.maxiter"),
                "dot": self._pressure.dot,
            }
            self._schur_op = schur_operator(B)
            block_amg = self._pressure.preconditioner()
            project = self._pressure.project
            lift = self._pressure.coarse_lift
            self._pkwargs["M"] = lambda r: block_amg(project(r)) + lift(r)

    @property
    def pressure_subdomains(self) -> int:
        return self._pressure.partition.m if self.B.n_pressure else 0

    def _velocity_step(self, rhs: np.ndarray) -> np.ndarray:
        u, rep = self._usolve(self._op_K, rhs, **self._ukwargs)
        self.velocity_iterations += rep.iterations
        return u

    def __call__(self, b_u: np.ndarray, b_p: np.ndarray):
        B = self.B
        if B.n_velocity:
            u = self._velocity_step(b_u)
        else:
            u = np.zeros(0)
        if B.n_pressure:
            p, rep = self._psolve(self._schur_op, b_p - matvec(B.D, u), **self._pkwargs)
            self.pressure_iterations += rep.iterations
            if B.n_velocity:
                u = self._velocity_step(b_u - matvec(B.G, p))
        else:
            p = np.zeros(0)
        return u, p


def apply_schur_preconditioner(
    B: BlockSystem,
    b_u: np.ndarray,
    b_p: np.ndarray,
    config: SolverConfig | None = None,
    **kwargs,
):
    """One-shot convenience wrapper: build the sweep and apply it once."""
    return SchurPreconditioner(B, config, **kwargs)(b_u, b_p)


class SchurSolver:
    """Outer flexible GMRES on the monolithic system, right-preconditioned by
    the pressure-correction sweep.

    The outer method is flexible by necessity -- the preconditioner is itself
    iterative and changes from application to application -- so a configured
    ``solver.type`` other than fgmres is overridden here.
    """

    def __init__(
        self,
        system: SparseMatrix | BlockSystem,
        pressure_mask=None,
        *,
        config: SolverConfig | None = None,
        pressure_partition: Partition | None = None,
        pressure_coords: np.ndarray | None = None,
        threads_per_subdomain: int = 1,
    ):
        self.cfg = config or SolverConfig()
        t0 = time.perf_counter()
        if isinstance(system, BlockSystem):
            self.B = system
        else:
            if pressure_mask is None:
                raise ConfigError(
                    "a pressure mask is required to split a monolithic matrix"
                )
            self.B = split_blocks(system, pressure_mask)
        self.precond = SchurPreconditioner(
            self.B,
            self.cfg,
            pressure_partition=pressure_partition,
            pressure_coords=pressure_coords,
            threads_per_subdomain=threads_per_subdomain,
        )
        self.setup_seconds = time.perf_counter() - t0

    def operator(self) -> LinearOperator:
        B = self.B

        def apply(x: np.ndarray) -> np.ndarray:
            u, p = B.split(x)
            return B.merge(
                matvec(B.K, u) + matvec(B.G, p),
                matvec(B.D, u) + matvec(B.S, p),
            )

        return LinearOperator(B.n, apply)

    def solve(self, b: np.ndarray):
        cfg = self.cfg
        B = self.B
        tol = cfg.get("solver.tol")
        bnorm = float(np.linalg.norm(b))
        op = self.operator()

        t0 = time.perf_counter()
        if bnorm == 0.0:
            x = np.zeros(B.n)
            iterations, converged, breakdown = 0, True, None
        else:
            def M(r: np.ndarray) -> np.ndarray:
                return B.merge(*self.precond(*B.split(r)))

            x, rep = fgmres(
                op,
                b,
                tol=0.0,
                atol=tol * bnorm,
                maxiter=cfg.get("solver.maxiter"),
                restart=cfg.get("solver.M"),
                M=M,
            )
            iterations, converged, breakdown = rep.iterations, rep.converged, rep.breakdown
        solve_seconds = time.perf_counter() - t0

        true_rel = (
            float(np.linalg.norm(b - op(x))) / bnorm if bnorm else 0.0
        )
        report = {
            "solver": "fgmres",
            "unknowns": B.n,
            "velocity_unknowns": B.n_velocity,
            "pressure_unknowns": B.n_pressure,
            "subdomains": self.precond.pressure_subdomains,
            "iterations": iterations,
            "converged": converged,
            "breakdown": breakdown,
            "relative_residual": true_rel,
            "velocity_iterations": self.precond.velocity_iterations,
            "pressure_iterations": self.precond.pressure_iterations,
            "setup_seconds": self.setup_seconds,
            "solve_seconds": solve_seconds,
        }
        return x, report


def solve_block_system(
    system: SparseMatrix | BlockSystem,
    b: np.ndarray,
    config: SolverConfig | None = None,
    *,
    pressure_mask=None,
    pressure_partition: Partition | None = None,
    pressure_coords: np.ndarray | None = None,
    threads_per_subdomain: int = 1,
):
    """Solve a masked saddle-point system; returns (x, report dict)."""
    solver = SchurSolver(
        system,
        pressure_mask,
        config=config,
        pressure_partition=pressure_partition,
        pressure_coords=pressure_coords,
        threads_per_subdomain=threads_per_subdomain,
    )
    return solver.solve(b)
