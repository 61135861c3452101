"""Compiled kernel bodies (numba) and the atomic float64 accumulator.

Layout conventions shared by every kernel here:
  * corpus CSR: rows are vocabulary words, columns are documents;
  * ``kernel``/``kernel_over_r``/``kernel_cost``: shape (V, v_r), row i
    contiguous so the per-nonzero dot over the query axis is unit stride;
  * ``u``/``x``: shape (n_docs, v_r), row j holds document j's iterate;
  * all floats are 64-bit and no fastmath is enabled, so accumulation
    order fully determines results.

Three traversal modes per fused kernel:
  * serial: one pass in CSR storage order;
  * atomic: nonzero ranges per worker, colliding column updates resolved
    with atomic adds (results order-free, hence run-to-run jitter at the
    rounding level);
  * columns: contiguous column blocks per worker via the column-major
    index.  Within a column the rows appear in increasing order, exactly
    the order the serial pass uses, so results are bitwise identical to
    serial for any worker count.
"""

from __future__ import annotations

import os

import numpy as np
import numba
from numba import njit, prange, types
from numba.core import cgutils
from numba.extending import intrinsic

_HW_THREADS = os.cpu_count() or 1


def set_workers(p: int) -> None:
    """Ask numba for ``p`` OS threads, capped at the hardware and the pool.

    Work decomposition (partition or block counts) is chosen by callers
    independently of this, so the executing thread count changes
    scheduling only, never results.
    """
    numba.set_num_threads(
        max(1, min(p, _HW_THREADS, numba.config.NUMBA_NUM_THREADS))
    )


@intrinsic
def _atomic_add(typingctx, arr_ty, i_ty, val_ty):
    """``arr[i] += val`` as one atomic read-modify-write (1-D float64)."""
    if not (isinstance(arr_ty, types.Array) and arr_ty.ndim == 1
            and arr_ty.dtype == types.float64):
        return None
    sig = types.float64(arr_ty, types.intp, types.float64)

    def codegen(context, builder, signature, args):
        arr, i, val = args
        aryty = signature.args[0]
        ary = context.make_array(aryty)(context, builder, arr)
        ptr = cgutils.get_item_pointer(context, builder, aryty, ary, [i],
                                       wraparound=False)
        # Plain adds commute, so relaxed ordering is sufficient.
        return builder.atomic_rmw("fadd", ptr, val, "monotonic")

    return sig, codegen


@intrinsic
def _atomic_add2(typingctx, arr_ty, i_ty, j_ty, val_ty):
    """``arr[i, j] += val`` as one atomic read-modify-write (2-D float64)."""
    if not (isinstance(arr_ty, types.Array) and arr_ty.ndim == 2
            and arr_ty.dtype == types.float64):
        return None
    sig = types.float64(arr_ty, types.intp, types.intp, types.float64)

    def codegen(context, builder, signature, args):
        arr, i, j, val = args
        aryty = signature.args[0]
        ary = context.make_array(aryty)(context, builder, arr)
        ptr = cgutils.get_item_pointer(context, builder, aryty, ary, [i, j],
                                       wraparound=False)
        return builder.atomic_rmw("fadd", ptr, val, "monotonic")

    return sig, codegen


# ---------------------------------------------------------------------------
# iteration-invariant matrices


@njit(nogil=True, parallel=True, cache=True)
def euclid_rows(vecs, sel, cost):
    """cost[i, a] = euclidean distance between vecs[sel[a]] and vecs[i]."""
    n_rows, dim = vecs.shape
    n_sel = sel.shape[0]
    for i in prange(n_rows):
        for a in range(n_sel):
            s = 0.0
            base = sel[a]
            for k in range(dim):
                d = vecs[base, k] - vecs[i, k]
                s += d * d
            cost[i, a] = np.sqrt(s)


@njit(nogil=True, parallel=True, cache=True)
def precompute_mats(cost, weights, lam, kernel, kor, kcost):
    """One row-parallel pass building all three derived matrices."""
    n_rows, n_sel = cost.shape
    for i in prange(n_rows):
        for a in range(n_sel):
            k = np.exp(-lam * cost[i, a])
            kernel[i, a] = k
            kor[i, a] = k / weights[a]
            kcost[i, a] = k * cost[i, a]


# ---------------------------------------------------------------------------
# type-1 fused kernel: per nonzero, sampled dot -> quotient -> scatter

@njit(nogil=True, cache=True)
def fused_iter_serial(row_ptr, col_idx, vals, kernel, kor, u, x, errpos):
    vr = kernel.shape[1]
    n_rows = row_ptr.shape[0] - 1
    for i in range(n_rows):
        for z in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                continue
            t = vals[z] / s
            for a in range(vr):
                x[j, a] += kor[i, a] * t


@njit(nogil=True, parallel=True, cache=True)
def fused_iter_atomic(row_ptr, col_idx, vals, kernel, kor, u, x,
                      bounds, start_rows, errpos):
    vr = kernel.shape[1]
    p = bounds.shape[0] - 1
    for w in prange(p):
        i = start_rows[w]
        for z in range(bounds[w], bounds[w + 1]):
            while row_ptr[i + 1] <= z:
                i += 1
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                continue
            t = vals[z] / s
            for a in range(vr):
                _atomic_add2(x, j, a, kor[i, a] * t)


@njit(nogil=True, parallel=True, cache=True)
def fused_iter_columns(col_ptr, csc_rows, csc_vals, kernel, kor, u, x,
                       col_bounds, errpos):
    vr = kernel.shape[1]
    nblocks = col_bounds.shape[0] - 1
    for w in prange(nblocks):
        for j in range(col_bounds[w], col_bounds[w + 1]):
            for q in range(col_ptr[j], col_ptr[j + 1]):
                i = csc_rows[q]
                s = 0.0
                for a in range(vr):
                    s += kernel[i, a] * u[j, a]
                if s == 0.0:
                    if errpos[0] < 0:
                        errpos[0] = i
                        errpos[1] = j
                    continue
                t = csc_vals[q] / s
                for a in range(vr):
                    x[j, a] += kor[i, a] * t


@njit(nogil=True, cache=True)
def fused_iter_serial_counted(row_ptr, col_idx, vals, kernel, kor, u, x,
                              errpos, counts):
    vr = kernel.shape[1]
    n_rows = row_ptr.shape[0] - 1
    macs = 0
    for i in range(n_rows):
        for z in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
                macs += 1
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                continue
            t = vals[z] / s
            for a in range(vr):
                x[j, a] += kor[i, a] * t
                macs += 1
    counts[0] = macs


@njit(nogil=True, parallel=True, cache=True)
def fused_iter_atomic_counted(row_ptr, col_idx, vals, kernel, kor, u, x,
                              bounds, start_rows, errpos, counts):
    vr = kernel.shape[1]
    p = bounds.shape[0] - 1
    for w in prange(p):
        macs = 0
        i = start_rows[w]
        for z in range(bounds[w], bounds[w + 1]):
            while row_ptr[i + 1] <= z:
                i += 1
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
                macs += 1
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                continue
            t = vals[z] / s
            for a in range(vr):
                _atomic_add2(x, j, a, kor[i, a] * t)
                macs += 1
        counts[w] = macs


# ---------------------------------------------------------------------------
# type-2 fused kernel: same sampled dot, second dot against the cost-weighted
# kernel, scalar accumulate into the per-document distance

@njit(nogil=True, cache=True)
def fused_final_serial(row_ptr, col_idx, vals, kernel, kcost, u, wmd, errpos):
    vr = kernel.shape[1]
    n_rows = row_ptr.shape[0] - 1
    for i in range(n_rows):
        for z in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                continue
            v = vals[z] / s
            d = 0.0
            for a in range(vr):
                d += kcost[i, a] * u[j, a]
            wmd[j] += v * d


@njit(nogil=True, parallel=True, cache=True)
def fused_final_atomic(row_ptr, col_idx, vals, kernel, kcost, u, wmd,
                       bounds, start_rows, errpos):
    vr = kernel.shape[1]
    p = bounds.shape[0] - 1
    for w in prange(p):
        i = start_rows[w]
        for z in range(bounds[w], bounds[w + 1]):
            while row_ptr[i + 1] <= z:
                i += 1
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                continue
            v = vals[z] / s
            d = 0.0
            for a in range(vr):
                d += kcost[i, a] * u[j, a]
            _atomic_add(wmd, j, v * d)


@njit(nogil=True, parallel=True, cache=True)
def fused_final_columns(col_ptr, csc_rows, csc_vals, kernel, kcost, u, wmd,
                        col_bounds, errpos):
    vr = kernel.shape[1]
    nblocks = col_bounds.shape[0] - 1
    for w in prange(nblocks):
        for j in range(col_bounds[w], col_bounds[w + 1]):
            for q in range(col_ptr[j], col_ptr[j + 1]):
                i = csc_rows[q]
                s = 0.0
                for a in range(vr):
                    s += kernel[i, a] * u[j, a]
                if s == 0.0:
                    if errpos[0] < 0:
                        errpos[0] = i
                        errpos[1] = j
                    continue
                v = csc_vals[q] / s
                d = 0.0
                for a in range(vr):
                    d += kcost[i, a] * u[j, a]
                wmd[j] += v * d


# ---------------------------------------------------------------------------
# standalone kernels (unfused route): every output slot is written by exactly
# one nonzero in the sampled product, so it parallelizes without atomics

@njit(nogil=True, cache=True)
def sddmm_serial(row_ptr, col_idx, vals, kernel, u, w_out, errpos):
    vr = kernel.shape[1]
    n_rows = row_ptr.shape[0] - 1
    for i in range(n_rows):
        for z in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                w_out[z] = 0.0
                continue
            w_out[z] = vals[z] / s


@njit(nogil=True, parallel=True, cache=True)
def sddmm_partitioned(row_ptr, col_idx, vals, kernel, u, w_out,
                      bounds, start_rows, errpos):
    vr = kernel.shape[1]
    p = bounds.shape[0] - 1
    for w in prange(p):
        i = start_rows[w]
        for z in range(bounds[w], bounds[w + 1]):
            while row_ptr[i + 1] <= z:
                i += 1
            j = col_idx[z]
            s = 0.0
            for a in range(vr):
                s += kernel[i, a] * u[j, a]
            if s == 0.0:
                if errpos[0] < 0:
                    errpos[0] = i
                    errpos[1] = j
                w_out[z] = 0.0
                continue
            w_out[z] = vals[z] / s


@njit(nogil=True, cache=True)
def spmm_serial(row_ptr, col_idx, w_vals, kor, x):
    vr = kor.shape[1]
    n_rows = row_ptr.shape[0] - 1
    for i in range(n_rows):
        for z in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[z]
            t = w_vals[z]
            for a in range(vr):
                x[j, a] += kor[i, a] * t


@njit(nogil=True, parallel=True, cache=True)
def spmm_atomic(row_ptr, col_idx, w_vals, kor, x, bounds, start_rows):
    vr = kor.shape[1]
    p = bounds.shape[0] - 1
    for w in prange(p):
        i = start_rows[w]
        for z in range(bounds[w], bounds[w + 1]):
            while row_ptr[i + 1] <= z:
                i += 1
            j = col_idx[z]
            t = w_vals[z]
            for a in range(vr):
                _atomic_add2(x, j, a, kor[i, a] * t)


@njit(nogil=True, parallel=True, cache=True)
def spmm_columns(col_ptr, csc_rows, csc_pos, w_vals, kor, x, col_bounds):
    vr = kor.shape[1]
    nblocks = col_bounds.shape[0] - 1
    for w in prange(nblocks):
        for j in range(col_bounds[w], col_bounds[w + 1]):
            for q in range(col_ptr[j], col_ptr[j + 1]):
                i = csc_rows[q]
                t = w_vals[csc_pos[q]]
                for a in range(vr):
                    x[j, a] += kor[i, a] * t


