"""MatrixMarket coordinate I/O plus the plain vector/mask file formats.

The reader accepts ``real``/``integer`` fields with ``general`` or
``symmetric`` symmetry; symmetric files are expanded (strictly lower entries
mirrored), indices converted from 1-based, and duplicate entries summed.
Vectors are one float per line; masks one ``0``/``1`` per line. All parse
failures raise ParseError naming the file and 1-based line number.
"""
from __future__ import annotations

import numpy as np

from .errors import ParseError
from .sparse import SparseMatrix

__all__ = [
    "read_matrix_market",
    "write_matrix_market",
    "read_vector",
    "write_vector",
    "read_mask",
]


def _fail(path, lineno, msg):
    raise ParseError(f"{path}:{lineno}: {msg}")


def read_matrix_market(path) -> SparseMatrix:
    path = str(path)
    try:
        fh = open(path, "r", encoding="ascii", errors="strict")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open: {exc}") from exc
    with fh:
        lines = fh.readlines()

    if not lines:
        _fail(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        _fail(path, 1, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>' header")
    _, obj, fmt, field, symmetry = (header[0], *[t.lower() for t in header[1:]])
    if obj != "matrix" or fmt != "coordinate":
        _fail(path, 1, f"unsupported object/format '{obj} {fmt}' (need matrix coordinate)")
    if field not in ("real", "integer"):
        _fail(path, 1, f"unsupported field '{field}' (need real or integer)")
    if symmetry not in ("general", "symmetric"):
        _fail(path, 1, f"unsupported symmetry '{symmetry}' (need general or symmetric)")

    # size line: first non-comment, non-blank line after the header
    k = 1
    while k < len(lines) and (lines[k].startswith("%") or not lines[k].strip()):
        k += 1
    if k == len(lines):
        _fail(path, len(lines), "missing size line")
    parts = lines[k].split()
    if len(parts) != 3:
        _fail(path, k + 1, f"size line needs 3 integers, got {len(parts)} tokens")
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError:
        _fail(path, k + 1, f"bad size line {lines[k].strip()!r}")
    if nrows < 0 or ncols < 0 or nnz < 0:
        _fail(path, k + 1, "negative dimensions")
    if symmetry == "symmetric" and nrows != ncols:
        _fail(path, k + 1, "symmetric matrix must be square")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    seen = 0
    for lineno in range(k + 1, len(lines)):
        text = lines[lineno].strip()
        if not text or text.startswith("%"):
            continue
        if seen == nnz:
            _fail(path, lineno + 1, f"more than the declared {nnz} entries")
        parts = text.split()
        if len(parts) != 3:
            _fail(path, lineno + 1, f"entry needs 'row col value', got {len(parts)} tokens")
        try:
            i = int(parts[0])
            j = int(parts[1])
            v = float(parts[2])
        except ValueError:
            _fail(path, lineno + 1, f"cannot parse entry {text!r}")
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            _fail(path, lineno + 1, f"index ({i}, {j}) outside {nrows}x{ncols}")
        rows[seen] = i - 1
        cols[seen] = j - 1
        vals[seen] = v
        seen += 1
    if seen != nnz:
        _fail(path, len(lines), f"expected {nnz} entries, found {seen}")

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols = np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]])
        vals = np.concatenate([vals, vals[off]])
    return SparseMatrix.from_coo(nrows, ncols, rows, cols, vals)


def write_matrix_market(A: SparseMatrix, path) -> None:
    """Write in coordinate/real/general form with full double precision."""
    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), np.diff(A.row_ptr))
    with open(str(path), "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
        for i, j, v in zip(rows, A.col_idx, A.values):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def read_vector(path) -> np.ndarray:
    path = str(path)
    try:
        fh = open(path, "r", encoding="ascii", errors="strict")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open: {exc}") from exc
    out = []
    with fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("%"):
                continue
            try:
                out.append(float(text))
            except ValueError:
                _fail(path, lineno, f"cannot parse vector entry {text!r}")
    return np.asarray(out, dtype=np.float64)


def write_vector(x: np.ndarray, path) -> None:
    with open(str(path), "w", encoding="ascii") as fh:
        for v in np.asarray(x, dtype=np.float64):
            fh.write(f"{v:.17g}\n")


def read_mask(path) -> np.ndarray:
    path = str(path)
    try:
        fh = open(path, "r", encoding="ascii", errors="strict")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open: {exc}") from exc
    out = []
    with fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("%"):
                continue
            if text == "0":
                out.append(False)
            elif text == "1":
                out.append(True)
            else:
                _fail(path, lineno, f"mask entries must be 0 or 1, got {text!r}")
    return np.asarray(out, dtype=bool)
