"""Built-in test problems on structured 3-D grids.

Both generators order unknowns box-by-box: the grid is cut into a
``mx x my x mz`` arrangement of subdomain boxes, nodes are numbered by
ascending box index (``bx + mx*(by + my*bz)``) and lexicographically inside
each box (x fastest: ``ix + nx*(iy + ny*iz)``). That makes every subdomain a
contiguous index range, which is what the runtime layer partitions over.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PartitionError
from .runtime import Partition
from .sparse import SparseMatrix, matvec

__all__ = [
    "GridSpec",
    "boxes_for",
    "PoissonProblem",
    "poisson3d",
    "SaddlePointProblem",
    "saddle_point",
]

STABILIZATION_EPS = 1e-2


@dataclass(frozen=True)
class GridSpec:
    """Interior-node grid of an open unit cube: node (ix,iy,iz) sits at
    ((ix+1)*hx, (iy+1)*hy, (iz+1)*hz) with hx = 1/(nx+1) and so on."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise PartitionError(f"grid must be at least 1x1x1, got {self}")

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def h(self) -> float:
        return 1.0 / (self.nx + 1)

    def spacing(self):
        return (1.0 / (self.nx + 1), 1.0 / (self.ny + 1), 1.0 / (self.nz + 1))


def _as_spec(n) -> GridSpec:
    if isinstance(n, GridSpec):
        return n
    if np.isscalar(n):
        return GridSpec(int(n), int(n), int(n))
    nx, ny, nz = n
    return GridSpec(int(nx), int(ny), int(nz))


def boxes_for(m: int):
    """Default box arrangement for m subdomains: a cube if m is a perfect
    cube, otherwise m slabs stacked along z."""
    if m < 1:
        raise PartitionError(f"need at least one subdomain, got {m}")
    c = round(m ** (1.0 / 3.0))
    for cand in (c - 1, c, c + 1):
        if cand >= 1 and cand**3 == m:
            return (cand, cand, cand)
    return (1, 1, m)


def _axis_chunk_starts(n: int, parts: int) -> np.ndarray:
    if not 1 <= parts <= n:
        raise PartitionError(f"cannot cut an axis of {n} nodes into {parts} boxes")
    base, rem = divmod(n, parts)
    sizes = np.full(parts, base, dtype=np.int64)
    sizes[:rem] += 1
    return np.concatenate(([0], np.cumsum(sizes)))[:-1]


def _node_ordering(spec: GridSpec, boxes):
    """new index of each lex-ordered node, plus per-box node counts."""
    mx, my, mz = (int(b) for b in boxes)
    sx = _axis_chunk_starts(spec.nx, mx)
    sy = _axis_chunk_starts(spec.ny, my)
    sz = _axis_chunk_starts(spec.nz, mz)
    k = np.arange(spec.n_nodes, dtype=np.int64)
    ix = k % spec.nx
    iy = (k // spec.nx) % spec.ny
    iz = k // (spec.nx * spec.ny)
    bx = np.searchsorted(sx, ix, side="right") - 1
    by = np.searchsorted(sy, iy, side="right") - 1
    bz = np.searchsorted(sz, iz, side="right") - 1
    box = bx + mx * (by + my * bz)
    order = np.lexsort((k, box))
    new_of_node = np.empty(spec.n_nodes, dtype=np.int64)
    new_of_node[order] = k
    counts = np.bincount(box, minlength=mx * my * mz)
    return new_of_node, counts, (ix, iy, iz)


def _partition_from_counts(n: int, counts: np.ndarray) -> Partition:
    edges = np.concatenate(([0], np.cumsum(counts)))
    return Partition(n, tuple((int(edges[j]), int(edges[j + 1])) for j in range(len(counts))))


def _laplacian_edges(spec: GridSpec):
    """(i, j) node pairs for each of the six stencil neighbors."""
    k = np.arange(spec.n_nodes, dtype=np.int64)
    ix = k % spec.nx
    iy = (k // spec.nx) % spec.ny
    iz = k // (spec.nx * spec.ny)
    pairs = []
    for coord, step, extent in ((ix, 1, spec.nx), (iy, spec.nx, spec.ny), (iz, spec.nx * spec.ny, spec.nz)):
        fwd = coord < extent - 1
        pairs.append((k[fwd], k[fwd] + step))
        bwd = coord > 0
        pairs.append((k[bwd], k[bwd] - step))
    return pairs


@dataclass(frozen=True)
class PoissonProblem:
    """7-point Poisson system with box-contiguous unknown ordering.

    ``unknown_of_node`` maps the lexicographic grid index of a node to its
    position in the unknown vector, so ``x[unknown_of_node]`` is the solution
    in natural grid order regardless of the box decomposition."""

    spec: GridSpec
    matrix: SparseMatrix
    rhs: np.ndarray
    coords: np.ndarray
    partition: Partition
    unknown_of_node: np.ndarray


def poisson3d(n, boxes=(1, 1, 1)) -> PoissonProblem:
    """Unit-cube Poisson problem: 6 on the diagonal, -1 per grid neighbor,
    right-hand side h^2 (h = 1/(nx+1)) in every row."""
    spec = _as_spec(n)
    new_of_node, counts, (ix, iy, iz) = _node_ordering(spec, boxes)
    N = spec.n_nodes
    rows = [new_of_node]
    cols = [new_of_node]
    vals = [np.full(N, 6.0)]
    for i, j in _laplacian_edges(spec):
        rows.append(new_of_node[i])
        cols.append(new_of_node[j])
        vals.append(np.full(i.shape[0], -1.0))
    A = SparseMatrix.from_coo(N, N, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
    h = spec.h
    rhs = np.full(N, h * h)
    hx, hy, hz = spec.spacing()
    coords = np.empty((N, 3))
    coords[new_of_node, 0] = (ix + 1) * hx
    coords[new_of_node, 1] = (iy + 1) * hy
    coords[new_of_node, 2] = (iz + 1) * hz
    return PoissonProblem(
        spec=spec,
        matrix=A,
        rhs=rhs,
        coords=coords,
        partition=_partition_from_counts(N, counts),
        unknown_of_node=new_of_node,
    )


@dataclass(frozen=True)
class SaddlePointProblem:
    """Stabilized Stokes-like system with unknowns interleaved per node as
    (u_x, u_y, u_z, p). ``mask`` is True on pressure unknowns. The right-hand
    side is manufactured from ``solution`` so the exact answer is known."""

    spec: GridSpec
    matrix: SparseMatrix
    rhs: np.ndarray
    mask: np.ndarray
    solution: np.ndarray
    node_coords: np.ndarray
    node_partition: Partition
    unknown_partition: Partition


def saddle_point(n, boxes=(1, 1, 1)) -> SaddlePointProblem:
    """Build the four-field block system.

    Velocity block: the 7-point Laplacian plus h^2 on the diagonal, one copy
    per component. Pressure gradient: centered differences with entries
    +-h/2, one-sided terms simply dropped at the boundary. Divergence is the
    exact transpose of the gradient, and the pressure-pressure block is the
    stabilization eps*h^2*I.
    """
    spec = _as_spec(n)
    new_of_node, counts, (ix, iy, iz) = _node_ordering(spec, boxes)
    N = spec.n_nodes
    h = spec.h
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    pn = new_of_node
    for c in range(3):
        # Laplacian diagonal plus the h^2 mass term
        put(4 * pn + c, 4 * pn + c, np.full(N, 6.0 + h * h))
        for i, j in _laplacian_edges(spec):
            put(4 * pn[i] + c, 4 * pn[j] + c, np.full(i.shape[0], -1.0))
    # gradient (velocity row, pressure column) and its exact transpose
    axes = ((ix, 1, spec.nx), (iy, spec.nx, spec.ny), (iz, spec.nx * spec.ny, spec.nz))
    k = np.arange(N, dtype=np.int64)
    for c, (coord, step, extent) in enumerate(axes):
        for sign, sel in ((+1.0, coord < extent - 1), (-1.0, coord > 0)):
            i = k[sel]
            j = i + int(sign) * step
            g = np.full(i.shape[0], sign * h / 2.0)
            put(4 * pn[i] + c, 4 * pn[j] + 3, g)
            put(4 * pn[j] + 3, 4 * pn[i] + c, g)
    # pressure stabilization
    put(4 * pn + 3, 4 * pn + 3, np.full(N, STABILIZATION_EPS * h * h))

    nuk = 4 * N
    A = SparseMatrix.from_coo(
        nuk, nuk, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )
    mask = np.tile(np.array([False, False, False, True]), N)
    solution = np.sin(0.37 * (np.arange(nuk) + 1.0)) + 1.5
    rhs = matvec(A, solution)
    hx, hy, hz = spec.spacing()
    node_coords = np.empty((N, 3))
    node_coords[pn, 0] = (ix + 1) * hx
    node_coords[pn, 1] = (iy + 1) * hy
    node_coords[pn, 2] = (iz + 1) * hz
    node_partition = _partition_from_counts(N, counts)
    unknown_partition = Partition(
        nuk, tuple((4 * b, 4 * e) for (b, e) in node_partition.ranges)
    )
    return SaddlePointProblem(
        spec=spec,
        matrix=A,
        rhs=rhs,
        mask=mask,
        solution=solution,
        node_coords=node_coords,
        node_partition=node_partition,
        unknown_partition=unknown_partition,
    )
