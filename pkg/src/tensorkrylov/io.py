"""Reading and writing tensors.

Coordinate text format (sparse tensors)::

    # comment lines start with '#'
    l m n nnz
    i j k value      (nnz lines, 1-based indices)

Dense tensors are stored as ``.npy`` files.
"""

from pathlib import Path

import numpy as np

from .tensor import SparseTensor3

COORD_SUFFIXES = (".tns", ".coo", ".txt")


class CoordinateFormatError(ValueError):
    """Malformed coordinate file; the message cites the offending line."""

    def __init__(self, lineno, msg, source="<input>"):
        super().__init__(f"{source}, line {lineno}: {msg}")
        self.lineno = lineno


def _content_lines(fh):
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def read_coordinate(path, duplicates="sum"):
    """Parse a coordinate file into a :class:`SparseTensor3`.

    Parameters
    ----------
    path : str or Path
    duplicates : {'sum', 'error'}
        Repeated coordinates are summed, or rejected with the line number
        of the repeat.
    """
    source = str(path)
    with open(path, encoding="utf-8") as fh:
        lines = _content_lines(fh)
        try:
            lineno, header = next(lines)
        except StopIteration:
            raise CoordinateFormatError(0, "missing header 'l m n nnz'", source) from None
        parts = header.split()
        if len(parts) != 4:
            raise CoordinateFormatError(lineno, f"header must be 'l m n nnz', got {header!r}", source)
        try:
            l, m, n, nnz = (int(p) for p in parts)
        except ValueError:
            raise CoordinateFormatError(lineno, f"non-integer header {header!r}", source) from None
        if min(l, m, n) <= 0 or nnz < 0:
            raise CoordinateFormatError(lineno, f"invalid dimensions or nnz in {header!r}", source)
        dims = (l, m, n)
        idx = np.empty((nnz, 3), dtype=np.int64)
        vals = np.empty(nnz)
        seen = {} if duplicates == "error" else None
        count = 0
        for lineno, line in lines:
            if count == nnz:
                raise CoordinateFormatError(lineno, f"more entries than the declared nnz={nnz}", source)
            parts = line.split()
            if len(parts) != 4:
                raise CoordinateFormatError(lineno, f"expected 'i j k value', got {line!r}", source)
            try:
                ijk = [int(p) for p in parts[:3]]
                val = float(parts[3])
            except ValueError:
                raise CoordinateFormatError(lineno, f"cannot parse entry {line!r}", source) from None
            for mode, (x, d) in enumerate(zip(ijk, dims), start=1):
                if not 1 <= x <= d:
                    raise CoordinateFormatError(
                        lineno, f"index {x} out of range 1..{d} in mode {mode}", source
                    )
            if not np.isfinite(val):
                raise CoordinateFormatError(lineno, f"non-finite value {parts[3]!r}", source)
            if seen is not None:
                key = tuple(ijk)
                if key in seen:
                    raise CoordinateFormatError(
                        lineno, f"duplicate coordinate {key} (first on line {seen[key]})", source
                    )
                seen[key] = lineno
            idx[count] = ijk
            vals[count] = val
            count += 1
        if count != nnz:
            raise CoordinateFormatError(lineno, f"declared nnz={nnz} but found {count} entries", source)
    return SparseTensor3(idx - 1, vals, dims)


def write_coordinate(A, path, comment=None):
    """Write a sparse tensor in coordinate format, entries sorted by ``(k, j, i)``.

    Values are written with the shortest representation that reads back to
    the same float, so a write/read round trip is exact.
    """
    if not isinstance(A, SparseTensor3):
        A = SparseTensor3.from_dense(A)
    l, m, n = A.shape
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"{l} {m} {n} {A.nnz}\n")
        for (i, j, k), v in zip(A.indices + 1, A.values):
            fh.write(f"{i} {j} {k} {float(v)!r}\n")


def load_tensor(path, duplicates="sum"):
    """Load a dense ``.npy`` tensor or a sparse coordinate file."""
    path = Path(path)
    if path.suffix == ".npy":
        A = np.load(path, allow_pickle=False)
        if A.ndim != 3:
            raise ValueError(f"{path} holds an array of ndim {A.ndim}, expected 3")
        return A.astype(np.float64, copy=False)
    return read_coordinate(path, duplicates=duplicates)


def save_tensor(A, path):
    path = Path(path)
    if path.suffix == ".npy":
        if isinstance(A, SparseTensor3):
            A = A.todense()
        np.save(path, np.asarray(A, dtype=np.float64))
    else:
        write_coordinate(A, path)
