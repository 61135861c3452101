"""Core sparse containers and the nonzero-balanced work partitioner.

All containers are immutable after construction (their numpy buffers are
marked read-only) and safe to share across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class StructuralError(ValueError):
    """Raised when input data violates a container's structural contract."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SparseVector:
    """Sparse nonnegative vector, used for normalized query histograms.

    ``indices`` are strictly increasing positions in ``[0, length)`` and
    ``values`` are the matching strictly positive weights.
    """

    length: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", _frozen(np.asarray(self.indices, dtype=np.int64)))
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=np.float64)))
        idx, val = self.indices, self.values
        if idx.shape != val.shape or idx.ndim != 1:
            raise StructuralError("indices and values must be 1-D and equally long")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.length:
                raise StructuralError("indices out of range")
            if np.any(np.diff(idx) <= 0):
                raise StructuralError("indices must be strictly increasing")
            if np.any(val <= 0.0):
                raise StructuralError("values must be strictly positive")

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.length, dtype=np.float64)
        out[self.indices] = self.values
        return out


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed sparse rows over the vocabulary axis.

    Shape is ``n_rows x n_cols`` (vocabulary words by documents for the
    corpus matrix).  Column indices are strictly increasing within each
    row.  A column-major companion index is built lazily for kernels that
    need exclusive per-column traversal; it never mutates the CSR arrays.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    _csc_cache: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", _frozen(np.asarray(self.row_ptr, dtype=np.int64)))
        object.__setattr__(self, "col_idx", _frozen(np.asarray(self.col_idx, dtype=np.int64)))
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=np.float64)))

    @property
    def nnz(self) -> int:
        return int(self.col_idx.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def row_of_nnz(self) -> np.ndarray:
        """Row index of every stored nonzero, in storage order."""
        counts = np.diff(self.row_ptr)
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), counts)

    def csc_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Column-major view: ``(col_ptr, rows, pos, values)``.

        ``pos`` maps each column-major slot back to its position in the CSR
        value array and ``values`` are pre-permuted accordingly.  Within a
        column, rows appear in increasing order, so a per-column walk
        accumulates in exactly the same order as a full row-major walk
        restricted to that column.
        """
        cached = self._csc_cache
        if cached is None:
            order = np.argsort(self.col_idx, kind="stable")
            col_ptr = np.zeros(self.n_cols + 1, dtype=np.int64)
            np.cumsum(np.bincount(self.col_idx, minlength=self.n_cols), out=col_ptr[1:])
            rows = _frozen(self.row_of_nnz()[order])
            cached = (
                _frozen(col_ptr),
                rows,
                _frozen(order.astype(np.int64)),
                _frozen(self.values[order]),
            )
            object.__setattr__(self, "_csc_cache", cached)
        return cached

    def to_triplets(self) -> list[tuple[int, int, float]]:
        rows = self.row_of_nnz()
        return [
            (int(r), int(c), float(v))
            for r, c, v in zip(rows, self.col_idx, self.values)
        ]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.float64)
        rows = self.row_of_nnz()
        out[rows, self.col_idx] = self.values
        return out


@dataclass(frozen=True)
class NnzPartition:
    """One worker's contiguous range of stored nonzeros.

    ``start_row`` is the row containing nonzero ``nnz_begin``; an empty
    partition at the end of the matrix carries ``start_row == n_rows``.
    """

    worker_id: int
    nnz_begin: int
    nnz_end: int
    start_row: int

    @property
    def size(self) -> int:
        return self.nnz_end - self.nnz_begin


def csr_from_triplets(
    entries: Iterable[tuple[int, int, float]], n_rows: int, n_cols: int
) -> CsrMatrix:
    """Build a CSR matrix from ``(row, col, value)`` triplets.

    Duplicate coordinates are summed; entries whose summed value is zero
    are dropped.  The result is independent of input order.
    """
    entries = list(entries)
    if entries:
        rows = np.fromiter((e[0] for e in entries), dtype=np.int64, count=len(entries))
        cols = np.fromiter((e[1] for e in entries), dtype=np.int64, count=len(entries))
        vals = np.fromiter((e[2] for e in entries), dtype=np.float64, count=len(entries))
        bad = (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise StructuralError(
                f"triplet out of bounds: ({rows[k]}, {cols[k]}, {vals[k]}) "
                f"for shape ({n_rows}, {n_cols})"
            )
        keys = rows * n_cols + cols
        order = np.argsort(keys, kind="stable")
        keys, vals = keys[order], vals[order]
        uniq, start = np.unique(keys, return_index=True)
        summed = np.add.reduceat(vals, start) if uniq.size else vals[:0]
        keep = summed != 0.0
        uniq, summed = uniq[keep], summed[keep]
        rows, cols = uniq // n_cols, uniq % n_cols
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        summed = np.zeros(0, dtype=np.float64)
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=row_ptr[1:])
    return CsrMatrix(n_rows, n_cols, row_ptr, cols, summed)


def csr_validate(m: CsrMatrix) -> list[str]:
    """Check every CSR structural invariant; return violations (empty if ok).

    Violations are data, not failures: callers decide whether to raise.
    """
    violations: list[str] = []
    rp, ci, vals = m.row_ptr, m.col_idx, m.values
    if rp.size != m.n_rows + 1:
        violations.append(f"row_ptr length {rp.size} != n_rows + 1 = {m.n_rows + 1}")
        return violations
    if rp.size and rp[0] != 0:
        violations.append(f"row_ptr[0] == {rp[0]}, expected 0")
    drops = np.flatnonzero(np.diff(rp) < 0)
    for r in drops:
        violations.append(f"row_ptr non-decreasing at row {int(r)}")
    if rp[-1] != ci.size:
        violations.append(f"row_ptr[n_rows] == {rp[-1]}, expected nnz == {ci.size}")
    if ci.size != vals.size:
        violations.append(f"col_idx length {ci.size} != values length {vals.size}")
    if drops.size == 0 and rp[-1] == ci.size == vals.size:
        for r in range(m.n_rows):
            lo, hi = rp[r], rp[r + 1]
            seg = ci[lo:hi]
            if seg.size == 0:
                continue
            if seg[0] < 0 or seg[-1] >= m.n_cols:
                violations.append(f"col_idx out of range in row {r}")
            if np.any(np.diff(seg) <= 0):
                violations.append(f"col_idx strictly increasing violated in row {r}")
        neg = np.flatnonzero(vals < 0.0)
        if neg.size:
            violations.append(f"negative value at nonzero {int(neg[0])}")
    return violations


def nnz_partition(row_ptr: np.ndarray, nnz: int, p: int) -> list[NnzPartition]:
    """Split ``[0, nnz)`` into ``p`` near-equal contiguous worker ranges.

    Sizes differ by at most one, larger shares first; when ``p`` exceeds
    ``nnz`` the surplus partitions are empty.  Each partition's starting
    row is located by binary search over ``row_ptr``, so a range may begin
    (and end) in the middle of a row.
    """
    if p < 1:
        raise ValueError(f"worker count must be >= 1, got {p}")
    row_ptr = np.asarray(row_ptr, dtype=np.int64)
    base, extra = divmod(int(nnz), p)
    sizes = np.full(p, base, dtype=np.int64)
    sizes[:extra] += 1
    bounds = np.zeros(p + 1, dtype=np.int64)
    np.cumsum(sizes, out=bounds[1:])
    start_rows = np.searchsorted(row_ptr, bounds[:-1], side="right") - 1
    return [
        NnzPartition(w, int(bounds[w]), int(bounds[w + 1]), int(start_rows[w]))
        for w in range(p)
    ]


def partitions_to_arrays(parts: Sequence[NnzPartition]) -> tuple[np.ndarray, np.ndarray]:
    """Flatten a partition list into ``(bounds, start_rows)`` kernel inputs."""
    bounds = np.zeros(len(parts) + 1, dtype=np.int64)
    start_rows = np.zeros(len(parts), dtype=np.int64)
    for k, part in enumerate(parts):
        if part.nnz_begin != bounds[k]:
            raise ValueError("partitions must be contiguous and ordered")
        bounds[k + 1] = part.nnz_end
        start_rows[k] = part.start_row
    return bounds, start_rows


def column_blocks(col_ptr: np.ndarray, p: int) -> np.ndarray:
    """Contiguous column ranges with approximately balanced nonzero counts.

    Returns ``p + 1`` column boundaries.  Unlike ``nnz_partition`` the split
    never crosses a column, which lets a worker own its columns' outputs
    outright.
    """
    if p < 1:
        raise ValueError(f"worker count must be >= 1, got {p}")
    col_ptr = np.asarray(col_ptr, dtype=np.int64)
    n_cols = col_ptr.size - 1
    nnz = int(col_ptr[-1])
    targets = (np.arange(1, p, dtype=np.int64) * nnz) // p
    cuts = np.searchsorted(col_ptr, targets, side="left")
    bounds = np.concatenate(([0], cuts, [n_cols])).astype(np.int64)
    return np.maximum.accumulate(bounds)
