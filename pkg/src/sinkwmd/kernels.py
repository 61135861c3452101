"""Sparse Sinkhorn kernels: cost rows, precomputed scaling matrices, the
standalone sampled-product and sparse-product operations, and their fusion.

Array orientation: the per-query matrices (``cost``, ``kernel``, ...) are
stored vocabulary-major with shape ``(V, v_r)`` so that the inner products
over the query-word axis run at unit stride; the iterates ``u``/``x`` are
stored document-major with shape ``(n_docs, v_r)`` for the same reason.
Logically they are the ``v_r x V`` and ``v_r x n_docs`` operands of the
scaling iteration.

Parallel modes (shared by the fused and standalone operations):
  * ``workers == 1``: single pass in storage order;
  * ``workers > 1``: the nonzeros are split into ``workers`` balanced
    contiguous ranges and colliding updates go through atomic adds,
    reproducing the single-worker result up to summation order;
  * ``deterministic=True``: workers own disjoint column blocks, which
    reproduces the single-worker result bitwise for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _jit
from .sparse import (
    CsrMatrix,
    NnzPartition,
    column_blocks,
    csr_from_triplets,
    nnz_partition,
    partitions_to_arrays,
)


class EmptyQueryError(ValueError):
    """Raised when a query histogram has no positive entries."""


class DegeneracyError(ArithmeticError):
    """Raised when a sampled denominator is exactly zero.

    Cannot happen for valid inputs (the kernel matrix and the iterates are
    strictly positive); it guards against corrupted data.
    """


@dataclass(frozen=True)
class SinkhornMatrices:
    """Per-query matrices fixed across scaling iterations.

    All four arrays have shape ``(V, v_r)``:
      * ``cost``: euclidean transport costs from each query word to each
        vocabulary word (``cost[sel[a], a] == 0``);
      * ``kernel``: ``exp(-lam * cost)``, entries in ``(0, 1]``;
      * ``kernel_over_r``: ``kernel`` divided columnwise by the query
        weights;
      * ``kernel_cost``: elementwise ``kernel * cost``.
    """

    cost: np.ndarray
    kernel: np.ndarray
    kernel_over_r: np.ndarray
    kernel_cost: np.ndarray
    lam: float

    @property
    def v_r(self) -> int:
        return int(self.kernel.shape[1])


def select_nonzero(r_full: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices and values of the positive entries of a query histogram.

    Returns ``(sel, weights)`` with ``sel`` increasing.  Raises
    ``EmptyQueryError`` when no entry is positive.
    """
    r_full = np.asarray(r_full, dtype=np.float64)
    if r_full.ndim != 1:
        raise ValueError("query histogram must be 1-D")
    if np.any(r_full < 0.0):
        raise ValueError("query histogram must be nonnegative")
    sel = np.flatnonzero(r_full > 0.0).astype(np.int64)
    if sel.size == 0:
        raise EmptyQueryError("query histogram has no positive entries")
    return sel, r_full[sel]


def euclidean_rows(
    vecs: np.ndarray,
    sel: np.ndarray,
    out: np.ndarray | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Euclidean distances from each selected word to every vocabulary word.

    Only the ``v_r`` columns of the full pairwise matrix that the query
    needs are materialized: ``out[i, a] = ||vecs[sel[a]] - vecs[i]||``.
    Row-parallel, so results do not depend on ``workers``.
    """
    vecs = np.ascontiguousarray(vecs, dtype=np.float64)
    sel = np.ascontiguousarray(sel, dtype=np.int64)
    if sel.size and (sel.min() < 0 or sel.max() >= vecs.shape[0]):
        raise IndexError("selected word ids out of bounds")
    if out is None:
        out = np.empty((vecs.shape[0], sel.size), dtype=np.float64)
    _jit.set_workers(workers)
    _jit.euclid_rows(vecs, sel, out)
    return out


def precompute(
    cost: np.ndarray,
    weights: np.ndarray,
    lam: float,
    buffers: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
    workers: int = 1,
) -> SinkhornMatrices:
    """Elementwise construction of the iteration-invariant matrices.

    ``buffers``, when given, are the destination arrays for ``kernel``,
    ``kernel_over_r`` and ``kernel_cost`` (workspace reuse).  Row-parallel,
    so results do not depend on ``workers``.
    """
    if lam <= 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if np.any(weights <= 0.0):
        raise ValueError("query weights must be strictly positive")
    if buffers is None:
        kernel = np.empty_like(cost)
        kernel_over_r = np.empty_like(cost)
        kernel_cost = np.empty_like(cost)
    else:
        kernel, kernel_over_r, kernel_cost = buffers
    _jit.set_workers(workers)
    _jit.precompute_mats(cost, weights, float(lam), kernel, kernel_over_r,
                         kernel_cost)
    return SinkhornMatrices(cost, kernel, kernel_over_r, kernel_cost, float(lam))


def _check_shapes(corpus: CsrMatrix, kernel: np.ndarray, u: np.ndarray) -> None:
    v_r = kernel.shape[1]
    if kernel.shape[0] != corpus.n_rows:
        raise ValueError(
            f"kernel rows {kernel.shape[0]} != corpus rows {corpus.n_rows}"
        )
    if u.shape != (corpus.n_cols, v_r):
        raise ValueError(
            f"iterate shape {u.shape} != (n_docs, v_r) = ({corpus.n_cols}, {v_r})"
        )


def _partition_arrays(
    corpus: CsrMatrix, workers: int, partitions: Sequence[NnzPartition] | None
) -> tuple[np.ndarray, np.ndarray]:
    if partitions is None:
        partitions = nnz_partition(corpus.row_ptr, corpus.nnz, workers)
    return partitions_to_arrays(partitions)


def _reject_partitions_in_deterministic_mode(partitions) -> None:
    # deterministic mode owns whole columns; nonzero ranges cannot apply
    if partitions is not None:
        raise ValueError("explicit nonzero partitions require deterministic=False")


def _raise_if_degenerate(errpos: np.ndarray) -> None:
    if errpos[0] >= 0:
        raise DegeneracyError(
            f"zero denominator at nonzero ({int(errpos[0])}, {int(errpos[1])})"
        )


def sddmm(
    corpus: CsrMatrix,
    kernel: np.ndarray,
    u: np.ndarray,
    workers: int = 1,
    partitions: Sequence[NnzPartition] | None = None,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Sampled quotient product on the corpus sparsity pattern.

    For every stored nonzero ``(i, j)`` the result holds
    ``corpus(i, j) / sum_a kernel[i, a] * u[j, a]``; the dense dot products
    are evaluated only at the sampled positions.  Output slots are disjoint
    per nonzero, so any worker count gives identical results.
    """
    _check_shapes(corpus, kernel, u)
    if out is None:
        out = np.empty(corpus.nnz, dtype=np.float64)
    errpos = np.full(2, -1, dtype=np.int64)
    if workers == 1 and partitions is None:
        _jit.sddmm_serial(
            corpus.row_ptr, corpus.col_idx, corpus.values, kernel, u, out, errpos
        )
    else:
        bounds, start_rows = _partition_arrays(corpus, workers, partitions)
        _jit.set_workers(bounds.size - 1)
        _jit.sddmm_partitioned(
            corpus.row_ptr, corpus.col_idx, corpus.values, kernel, u, out,
            bounds, start_rows, errpos,
        )
    _raise_if_degenerate(errpos)
    return out


def spmm(
    corpus: CsrMatrix,
    w_values: np.ndarray,
    kernel_over_r: np.ndarray,
    workers: int = 1,
    deterministic: bool = False,
    partitions: Sequence[NnzPartition] | None = None,
    x_out: np.ndarray | None = None,
) -> np.ndarray:
    """Dense-by-sparse product accumulating into the document iterates.

    ``x_out[j, a] += sum_i kernel_over_r[i, a] * w(i, j)`` over the stored
    nonzeros, without materializing a transposed sparse operand.  ``x_out``
    must be zero-initialized by the caller when provided.
    """
    v_r = kernel_over_r.shape[1]
    if w_values.shape != (corpus.nnz,):
        raise ValueError(f"w has {w_values.shape[0]} values, corpus nnz is {corpus.nnz}")
    if x_out is None:
        x_out = np.zeros((corpus.n_cols, v_r), dtype=np.float64)
    if deterministic:
        _reject_partitions_in_deterministic_mode(partitions)
    if deterministic and workers > 1:
        col_ptr, csc_rows, csc_pos, _ = corpus.csc_index()
        blocks = column_blocks(col_ptr, workers)
        _jit.set_workers(workers)
        _jit.spmm_columns(col_ptr, csc_rows, csc_pos, w_values, kernel_over_r,
                          x_out, blocks)
    elif workers == 1 and partitions is None:
        _jit.spmm_serial(corpus.row_ptr, corpus.col_idx, w_values,
                         kernel_over_r, x_out)
    else:
        bounds, start_rows = _partition_arrays(corpus, workers, partitions)
        _jit.set_workers(bounds.size - 1)
        _jit.spmm_atomic(corpus.row_ptr, corpus.col_idx, w_values,
                         kernel_over_r, x_out, bounds, start_rows)
    return x_out


def fused_iteration(
    corpus: CsrMatrix,
    mats: SinkhornMatrices,
    u: np.ndarray,
    x_out: np.ndarray,
    workers: int = 1,
    deterministic: bool = False,
    partitions: Sequence[NnzPartition] | None = None,
    counts: np.ndarray | None = None,
) -> None:
    """One scaling iteration in a single pass over the corpus nonzeros.

    Equivalent to ``spmm(corpus, sddmm(corpus, kernel, u), kernel_over_r)``
    with the same accumulation order, but each sampled quotient is consumed
    immediately and never stored.  ``x_out`` must be zero-initialized.

    ``counts``, an int64 array with one slot per worker, enables
    instrumentation: each slot receives its worker's multiply-accumulate
    count (one per dot step plus one per scatter step).
    """
    _check_shapes(corpus, mats.kernel, u)
    if x_out.shape != u.shape:
        raise ValueError(f"x_out shape {x_out.shape} != u shape {u.shape}")
    errpos = np.full(2, -1, dtype=np.int64)
    if deterministic:
        _reject_partitions_in_deterministic_mode(partitions)
    if deterministic and workers > 1:
        if counts is not None:
            raise ValueError("instrumentation is unavailable in deterministic mode")
        col_ptr, csc_rows, _, csc_vals = corpus.csc_index()
        blocks = column_blocks(col_ptr, workers)
        _jit.set_workers(workers)
        _jit.fused_iter_columns(col_ptr, csc_rows, csc_vals, mats.kernel,
                                mats.kernel_over_r, u, x_out, blocks, errpos)
    elif workers == 1 and partitions is None:
        if counts is None:
            _jit.fused_iter_serial(corpus.row_ptr, corpus.col_idx, corpus.values,
                                   mats.kernel, mats.kernel_over_r, u, x_out, errpos)
        else:
            _jit.fused_iter_serial_counted(
                corpus.row_ptr, corpus.col_idx, corpus.values,
                mats.kernel, mats.kernel_over_r, u, x_out, errpos, counts,
            )
    else:
        bounds, start_rows = _partition_arrays(corpus, workers, partitions)
        _jit.set_workers(bounds.size - 1)
        if counts is None:
            _jit.fused_iter_atomic(
                corpus.row_ptr, corpus.col_idx, corpus.values,
                mats.kernel, mats.kernel_over_r, u, x_out,
                bounds, start_rows, errpos,
            )
        else:
            if counts.shape[0] != bounds.size - 1:
                raise ValueError("counts must have one slot per worker")
            _jit.fused_iter_atomic_counted(
                corpus.row_ptr, corpus.col_idx, corpus.values,
                mats.kernel, mats.kernel_over_r, u, x_out,
                bounds, start_rows, errpos, counts,
            )
    _raise_if_degenerate(errpos)


def fused_final(
    corpus: CsrMatrix,
    mats: SinkhornMatrices,
    u: np.ndarray,
    workers: int = 1,
    deterministic: bool = False,
    partitions: Sequence[NnzPartition] | None = None,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Distance evaluation in a single pass over the corpus nonzeros.

    For each stored nonzero ``(i, j)``: one dot for the sampled quotient,
    one dot of the cost-weighted kernel row against document j's iterate,
    and a scalar accumulate into ``wmd[j]``.
    """
    _check_shapes(corpus, mats.kernel, u)
    if out is None:
        out = np.zeros(corpus.n_cols, dtype=np.float64)
    elif out.shape != (corpus.n_cols,):
        raise ValueError(f"out shape {out.shape} != ({corpus.n_cols},)")
    else:
        out[:] = 0.0
    errpos = np.full(2, -1, dtype=np.int64)
    if deterministic:
        _reject_partitions_in_deterministic_mode(partitions)
    if deterministic and workers > 1:
        col_ptr, csc_rows, _, csc_vals = corpus.csc_index()
        blocks = column_blocks(col_ptr, workers)
        _jit.set_workers(workers)
        _jit.fused_final_columns(col_ptr, csc_rows, csc_vals, mats.kernel,
                                 mats.kernel_cost, u, out, blocks, errpos)
    elif workers == 1 and partitions is None:
        _jit.fused_final_serial(corpus.row_ptr, corpus.col_idx, corpus.values,
                                mats.kernel, mats.kernel_cost, u, out, errpos)
    else:
        bounds, start_rows = _partition_arrays(corpus, workers, partitions)
        _jit.set_workers(bounds.size - 1)
        _jit.fused_final_atomic(corpus.row_ptr, corpus.col_idx, corpus.values,
                                mats.kernel, mats.kernel_cost, u, out,
                                bounds, start_rows, errpos)
    _raise_if_degenerate(errpos)
    return out


_warmed = False


def warmup() -> None:
    """Compile (or load from disk cache) every kernel specialization.

    Runs each operation in every parallel mode on a two-word instance so
    later calls, and in particular timed benchmark sections, never pay JIT
    latency.
    """
    global _warmed
    if _warmed:
        return
    corpus = csr_from_triplets([(0, 0, 0.5), (1, 0, 0.5), (1, 1, 1.0)], 2, 2)
    vecs = np.array([[0.0, 0.0], [1.0, 0.0]])
    sel, weights = select_nonzero(np.array([0.5, 0.5]))
    cost = euclidean_rows(vecs, sel, workers=2)
    mats = precompute(cost, weights, 1.0)
    u = np.full((2, 2), 1.0)
    counts = np.zeros(2, dtype=np.int64)
    for workers, deterministic in ((1, False), (2, False), (2, True)):
        x = np.zeros((2, 2))
        fused_iteration(corpus, mats, u, x, workers=workers, deterministic=deterministic)
        fused_final(corpus, mats, u, workers=workers, deterministic=deterministic)
        w = sddmm(corpus, mats.kernel, u, workers=workers)
        spmm(corpus, w, mats.kernel_over_r, workers=workers, deterministic=deterministic)
    x = np.zeros((2, 2))
    fused_iteration(corpus, mats, u, x, counts=counts[:1])
    x[:] = 0.0
    fused_iteration(corpus, mats, u, x, workers=2, counts=counts)
    _warmed = True
