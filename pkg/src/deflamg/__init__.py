"""deflamg: sparse solvers combining subdomain deflation with local smoothed-aggregation AMG.

The package provides CSR sparse primitives (optionally compiled), a
single-process subdomain runtime with deterministic collectives, smoothed
aggregation AMG, deflated Krylov solvers (CG, BiCGStab(2), GMRES, FGMRES), a
pressure-Schur block solver, problem generators, and a command-line interface.
"""
from .backend import COMPILED
from .errors import (
    BreakdownError,
    CommunicatorError,
    ConfigError,
    DeflamgError,
    DimensionError,
    ParseError,
    PartitionError,
    SingularMatrixError,
    StructureError,
)
from .config import SolverConfig
from .deflation import DeflatedSolver
from .schur import SchurSolver, solve_block_system
from .sparse import LuFactorization, SparseMatrix, dense_lu, spgemm, spmv, transpose

__version__ = "0.1.0"

__all__ = [
    "COMPILED",
    "SolverConfig",
    "DeflatedSolver",
    "SchurSolver",
    "solve_block_system",
    "SparseMatrix",
    "LuFactorization",
    "spmv",
    "transpose",
    "spgemm",
    "dense_lu",
    "DeflamgError",
    "DimensionError",
    "StructureError",
    "SingularMatrixError",
    "PartitionError",
    "CommunicatorError",
    "BreakdownError",
    "ParseError",
    "ConfigError",
    "__version__",
]
