"""Naive dense solver (the correctness oracle) and the unfused comparator.

``sinkhorn_wmd_dense`` performs every product as a full dense operation,
materializing each intermediate, wasted work included: that is the point,
it is the reference the optimized path is checked against, not a
performance target.  It shares no kernel code with the sparse path.

``unfused_sparse_wmd`` runs the optimized algorithm but with the sampled
quotient and the sparse product as two separate passes over a stored
intermediate, for benchmarking the benefit of fusing them.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.spatial.distance import cdist

from . import kernels
from .kernels import DegeneracyError, EmptyQueryError
from .solver import SolverConfig
from .sparse import CsrMatrix


def sinkhorn_wmd_dense(
    query: np.ndarray,
    corpus_dense: np.ndarray,
    embeddings: np.ndarray,
    config: SolverConfig,
) -> np.ndarray:
    """Dense reference distances; single-threaded numpy throughout.

    ``corpus_dense`` is the V x N column-normalized document matrix as a
    plain dense array (use ``CsrMatrix.to_dense()``).
    """
    query = np.asarray(query, dtype=np.float64)
    corpus_dense = np.asarray(corpus_dense, dtype=np.float64)
    embeddings = np.asarray(embeddings, dtype=np.float64)
    sel = query > 0.0
    if not np.any(sel):
        raise EmptyQueryError("query histogram has no positive entries")
    r = query[sel].reshape(-1, 1)
    cost = cdist(embeddings[sel], embeddings).astype(np.float64)  # (v_r, V)
    gibbs = np.exp(-config.lam * cost)
    gibbs_over_r = (1.0 / r) * gibbs
    gibbs_t = gibbs.T
    n_docs = corpus_dense.shape[1]
    v_r = int(np.count_nonzero(sel))
    x = np.ones((v_r, n_docs)) / v_r
    for _ in range(config.max_iter):
        u = 1.0 / x
        v = corpus_dense * (1.0 / (gibbs_t @ u))
        x_new = gibbs_over_r @ v
        if config.tol is not None:
            if float(np.max(np.abs(x_new - x))) < config.tol:
                x = x_new
                break
        x = x_new
    if np.min(x) <= 0.0:
        raise DegeneracyError("nonpositive iterate entry in dense reference")
    u = 1.0 / x
    v = corpus_dense * (1.0 / (gibbs_t @ u))
    return np.asarray((u * ((gibbs * cost) @ v)).sum(axis=0))


def unfused_sparse_wmd(
    query: np.ndarray,
    corpus: CsrMatrix,
    embeddings: np.ndarray,
    config: SolverConfig,
    timings: dict[str, float] | None = None,
) -> np.ndarray:
    """Same algorithm as the fused solver, with the intermediate stored.

    Calls the standalone sampled-quotient and sparse-product kernels in
    sequence each iteration, materializing the quotient values between
    them.  In serial deterministic mode this matches the fused solver
    bitwise because both use the identical per-nonzero accumulation order.

    Pass a dict as ``timings`` to receive per-phase wall-clock durations
    under the same phase names the fused solver reports.
    """
    record = timings if timings is not None else {}
    t_start = time.perf_counter()
    t0 = time.perf_counter()
    sel, weights = kernels.select_nonzero(np.asarray(query, dtype=np.float64))
    record["select"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    cost = kernels.euclidean_rows(
        np.ascontiguousarray(embeddings, dtype=np.float64), sel,
        workers=config.workers,
    )
    record["distances"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    mats = kernels.precompute(cost, weights, config.lam, workers=config.workers)
    record["precompute"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    n_docs = corpus.n_cols
    v_r = sel.size
    x = np.full((n_docs, v_r), 1.0 / v_r)
    x_prev = np.empty_like(x)
    w_values = np.empty(corpus.nnz, dtype=np.float64)
    record["init"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    for _ in range(config.max_iter):
        if np.min(x) <= 0.0:
            raise DegeneracyError("nonpositive iterate entry")
        u = 1.0 / x
        kernels.sddmm(corpus, mats.kernel, u, workers=config.workers, out=w_values)
        x, x_prev = x_prev, x
        x.fill(0.0)
        kernels.spmm(
            corpus, w_values, mats.kernel_over_r,
            workers=config.workers, deterministic=config.deterministic, x_out=x,
        )
        if config.tol is not None:
            if float(np.max(np.abs(x - x_prev))) < config.tol:
                break
    record["iterations"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if np.min(x) <= 0.0:
        raise DegeneracyError("nonpositive iterate entry")
    u = 1.0 / x
    wmd = kernels.fused_final(
        corpus, mats, u,
        workers=config.workers, deterministic=config.deterministic,
    )
    record["final"] = time.perf_counter() - t0
    record["total"] = time.perf_counter() - t_start
    return wmd
