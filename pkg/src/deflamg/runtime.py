"""Single-process subdomain runtime with deterministic collectives.

Subdomains are contiguous row ranges executed by one controller process;
collective operations (halo exchange, allreduce) take one contribution per
subdomain and combine them in ascending subdomain order, so results are
bitwise reproducible run after run. The call surface is shaped so a
message-passing backend could replace the Communicator without touching
solver code. ``threads_per_subdomain`` widens the local matvec into
row-chunked parallel sections; chunk boundaries never change the numbers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CommunicatorError, DimensionError, PartitionError
from .sparse import SparseMatrix, matvec_rows

__all__ = [
    "Partition",
    "partition_contiguous",
    "SubdomainView",
    "split_matrix",
    "Communicator",
    "halo_exchange",
    "DistributedOperator",
    "partition_dot",
]


@dataclass(frozen=True)
class Partition:
    """Contiguous row ranges [begin, end) covering [0, nglobal) in order."""

    nglobal: int
    ranges: tuple

    def __post_init__(self):
        ranges = tuple((int(b), int(e)) for (b, e) in self.ranges)
        object.__setattr__(self, "ranges", ranges)
        if not ranges:
            raise PartitionError("partition needs at least one range")
        cursor = 0
        for j, (b, e) in enumerate(ranges):
            if b != cursor:
                raise PartitionError(f"range {j} starts at {b}, expected {cursor}")
            if e <= b:
                raise PartitionError(f"range {j} [{b}, {e}) is empty")
            cursor = e
        if cursor != self.nglobal:
            raise PartitionError(f"ranges end at {cursor}, expected {self.nglobal}")

    @property
    def m(self) -> int:
        return len(self.ranges)

    def starts(self) -> np.ndarray:
        return np.fromiter((b for b, _ in self.ranges), dtype=np.int64, count=self.m)

    def owners(self, global_indices: np.ndarray) -> np.ndarray:
        """Owning subdomain of each global index."""
        return np.searchsorted(self.starts(), global_indices, side="right") - 1


def partition_contiguous(n: int, m: int) -> Partition:
    """Split [0, n) into m contiguous ranges with sizes differing by at most one.

    The remainder goes to the first ranges: (5, 2) -> [0, 3), [3, 5).
    """
    if not 1 <= m <= n:
        raise PartitionError(f"cannot split {n} unknowns into {m} subdomains")
    base, rem = divmod(n, m)
    sizes = [base + 1 if j < rem else base for j in range(m)]
    edges = np.concatenate(([0], np.cumsum(sizes)))
    return Partition(n, tuple((int(edges[j]), int(edges[j + 1])) for j in range(m)))


@dataclass(frozen=True)
class SubdomainView:
    """One subdomain's rows with columns split into a local block and ghosts.

    ``local_matrix`` is n_local x (n_local + n_ghost): columns [0, n_local)
    are the subdomain's own unknowns, the rest are ghost columns in ascending
    global order. ``ghost_map`` groups the ghost globals by owning neighbor,
    ascending; every ghost column appears exactly once.
    """

    index: int
    begin: int
    end: int
    local_matrix: SparseMatrix
    ghost_globals: np.ndarray
    ghost_map: tuple
    local_coords: np.ndarray | None = None

    @property
    def n_local(self) -> int:
        return self.end - self.begin

    @property
    def n_ghost(self) -> int:
        return int(self.ghost_globals.shape[0])

    def local_block(self) -> SparseMatrix:
        """The square diagonal block (ghost columns discarded)."""
        n = self.n_local
        keep = self.local_matrix.col_idx < n
        counts = np.diff(self.local_matrix.row_ptr)
        rows = np.repeat(np.arange(n, dtype=np.int64), counts)
        return SparseMatrix.from_coo(
            n, n, rows[keep], self.local_matrix.col_idx[keep], self.local_matrix.values[keep]
        )


def split_matrix(A: SparseMatrix, P: Partition, coords: np.ndarray | None = None) -> list:
    """Split a square matrix into per-subdomain views (values copied bitwise)."""
    if A.nrows != A.ncols:
        raise DimensionError(f"matrix must be square, got {A.nrows}x{A.ncols}")
    if P.nglobal != A.nrows:
        raise PartitionError(f"partition covers {P.nglobal} rows, matrix has {A.nrows}")
    views = []
    starts = P.starts()
    for j, (b, e) in enumerate(P.ranges):
        lo, hi = int(A.row_ptr[b]), int(A.row_ptr[e])
        cols = A.col_idx[lo:hi]
        vals = A.values[lo:hi]
        row_ptr = (A.row_ptr[b : e + 1] - lo).astype(np.int64)
        is_local = (cols >= b) & (cols < e)
        ghost_globals = np.unique(cols[~is_local])
        n_local = e - b
        new_cols = np.empty_like(cols)
        new_cols[is_local] = cols[is_local] - b
        new_cols[~is_local] = n_local + np.searchsorted(ghost_globals, cols[~is_local])
        local = SparseMatrix(n_local, n_local + ghost_globals.shape[0], row_ptr, new_cols, vals)
        owners = P.owners(ghost_globals)
        ghost_map = []
        for owner in np.unique(owners):
            ghost_map.append((int(owner), ghost_globals[owners == owner]))
        views.append(
            SubdomainView(
                index=j,
                begin=b,
                end=e,
                local_matrix=local,
                ghost_globals=ghost_globals,
                ghost_map=tuple(ghost_map),
                local_coords=None if coords is None else coords[b:e],
            )
        )
    return views


class Communicator:
    """Deterministic fork-join collectives over m subdomain slots.

    Collectives have barrier semantics: a call returns only when every
    participant's contribution has been combined, always in ascending
    subdomain order.
    """

    def __init__(self, m: int, threads_per_subdomain: int = 1):
        if m < 1:
            raise CommunicatorError("need at least one participant")
        if threads_per_subdomain < 1:
            raise CommunicatorError("threads_per_subdomain must be >= 1")
        self.m = m
        self.threads_per_subdomain = threads_per_subdomain
        self._pool = (
            ThreadPoolExecutor(max_workers=threads_per_subdomain)
            if threads_per_subdomain > 1
            else None
        )

    # -- lifecycle ----------------------------------------------------------

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- collectives ----------------------------------------------------------

    def _check_participants(self, parts, what: str):
        if len(parts) != self.m:
            raise CommunicatorError(
                f"{what}: {len(parts)} participants, expected {self.m}"
            )
        for j, p in enumerate(parts):
            if p is None:
                raise CommunicatorError(f"{what}: participant {j} dropped out")

    def allreduce_sum(self, parts: list) -> np.ndarray:
        """Elementwise sum of one equal-length vector per participant."""
        self._check_participants(parts, "allreduce_sum")
        first = np.asarray(parts[0], dtype=np.float64)
        out = first.copy()
        for j in range(1, self.m):
            p = np.asarray(parts[j], dtype=np.float64)
            if p.shape != out.shape:
                raise CommunicatorError(
                    f"allreduce_sum: participant {j} has shape {p.shape}, expected {out.shape}"
                )
            out += p
        return out

    def allreduce_sum_scalar(self, parts: list) -> float:
        self._check_participants(parts, "allreduce_sum")
        total = 0.0
        for p in parts:
            total += float(p)
        return total

    def map(self, fn, items: list) -> list:
        """Apply fn to one item per subdomain, results in subdomain order."""
        self._check_participants(items, "map")
        return [fn(j, items[j]) for j in range(self.m)]

    # -- local compute with optional intra-subdomain threading ---------------

    def local_matvec(self, A: SparseMatrix, x: np.ndarray) -> np.ndarray:
        """A @ x computed in threads_per_subdomain row chunks (numerically inert)."""
        y = np.empty(A.nrows)
        T = self.threads_per_subdomain
        if self._pool is None or T == 1 or A.nrows < 2 * T:
            matvec_rows(A, x, y, 0, A.nrows)
            return y
        bounds = [A.nrows * t // T for t in range(T + 1)]
        futures = [
            self._pool.submit(matvec_rows, A, x, y, bounds[t], bounds[t + 1])
            for t in range(T)
            if bounds[t] < bounds[t + 1]
        ]
        for f in futures:
            f.result()
        return y


def halo_exchange(views: list, local_values: list, comm: Communicator) -> list:
    """Gather each subdomain's ghost values from its neighbors' local vectors.

    Returns one array per subdomain, aligned with that view's ghost columns
    (ascending global order). Barrier semantics; raises CommunicatorError on a
    missing participant or a wrong-length local vector.
    """
    comm._check_participants(views, "halo_exchange")
    comm._check_participants(local_values, "halo_exchange")
    for j, v in enumerate(views):
        xl = local_values[j]
        if len(xl) != v.n_local:
            raise CommunicatorError(
                f"halo_exchange: participant {j} passed {len(xl)} values, expected {v.n_local}"
            )
    out = []
    for v in views:
        if v.n_ghost == 0:
            out.append(np.empty(0))
            continue
        pieces = []
        for owner, globals_ in v.ghost_map:
            owner_begin = views[owner].begin
            pieces.append(np.asarray(local_values[owner])[globals_ - owner_begin])
        out.append(np.concatenate(pieces))
    return out


class DistributedOperator:
    """Row-partitioned matvec: halo exchange, then per-subdomain local products."""

    def __init__(self, views: list, partition: Partition, comm: Communicator):
        self.views = views
        self.partition = partition
        self.comm = comm
        self.n = partition.nglobal

    def apply(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] != self.n:
            raise DimensionError(f"operand has length {x.shape[0]}, expected {self.n}")
        locals_ = [x[b:e] for (b, e) in self.partition.ranges]
        ghosts = halo_exchange(self.views, locals_, self.comm)
        y = np.empty(self.n)
        for j, v in enumerate(self.views):
            xl = np.concatenate((locals_[j], ghosts[j]))
            y[v.begin : v.end] = self.comm.local_matvec(v.local_matrix, xl)
        return y

    __call__ = apply


def partition_dot(partition: Partition, comm: Communicator):
    """Dot product computed as per-subdomain partials reduced in fixed order."""

    def dot(x: np.ndarray, y: np.ndarray) -> float:
        parts = [float(np.dot(x[b:e], y[b:e])) for (b, e) in partition.ranges]
        return comm.allreduce_sum_scalar(parts)

    return dot
