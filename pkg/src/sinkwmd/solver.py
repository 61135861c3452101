"""Scaling-iteration solver: one query histogram against a document batch.

The solve proceeds in phases that are timed individually: select the
query's positive entries, materialize its distance rows, precompute the
iteration-invariant matrices, initialize the iterate, run the fused
scaling iterations, and evaluate the distances.  The final scaling vector
is recomputed from the converged iterate before the distance evaluation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import DegeneracyError
from .sparse import CsrMatrix, SparseVector


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``lam`` is the entropy-regularization strength (larger values approach
    the unregularized transport cost).  With ``tol`` unset the loop always
    runs ``max_iter`` iterations; with ``tol`` set it exits early once the
    max-norm change of the iterate drops below it.
    """

    lam: float = 10.0
    max_iter: int = 15
    tol: float | None = None
    workers: int = 1
    deterministic: bool = False

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.tol is not None and self.tol < 0.0:
            raise ValueError(f"tol must be nonnegative, got {self.tol}")


@dataclass(frozen=True)
class SolverResult:
    """Distances for one query against every target document."""

    wmd: np.ndarray
    iterations_run: int
    converged: bool
    timings: dict[str, float]


class SinkhornWorkspace:
    """Preallocated buffers reused across iterations and across queries.

    Buffers grow monotonically; repeated queries against the same corpus
    allocate nothing after the largest query has been seen.  Views handed
    out are contiguous and exactly shaped.
    """

    def __init__(self):
        self._pools: dict[str, np.ndarray] = {}

    def _flat(self, name: str, size: int) -> np.ndarray:
        pool = self._pools.get(name)
        if pool is None or pool.size < size:
            pool = np.empty(size, dtype=np.float64)
            self._pools[name] = pool
        return pool[:size]

    def matrix(self, name: str, n_rows: int, n_cols: int) -> np.ndarray:
        return self._flat(name, n_rows * n_cols).reshape(n_rows, n_cols)

    def vector(self, name: str, size: int) -> np.ndarray:
        return self._flat(name, size)


def init_x(v_r: int, n_docs: int) -> np.ndarray:
    """Uniform initial iterate: every entry ``1 / v_r``.

    Logically the iterate is ``v_r x n_docs``; it is stored document-major
    as an ``(n_docs, v_r)`` array (row ``j`` belongs to document ``j``).
    """
    if v_r < 1 or n_docs < 1:
        raise ValueError(f"need v_r >= 1 and n_docs >= 1, got ({v_r}, {n_docs})")
    return np.full((n_docs, v_r), 1.0 / v_r, dtype=np.float64)


def update_u(x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Elementwise reciprocal of the iterate."""
    x = np.asarray(x)
    if x.size and np.min(x) <= 0.0:
        flat = int(np.argmin(x))
        raise DegeneracyError(
            f"nonpositive iterate entry {x.flat[flat]} at flat index {flat}"
        )
    return np.divide(1.0, x, out=out)


def sinkhorn_wmd(
    query: np.ndarray | SparseVector,
    corpus: CsrMatrix,
    embeddings: np.ndarray,
    config: SolverConfig,
    workspace: SinkhornWorkspace | None = None,
) -> SolverResult:
    """Regularized transport distance of one query to every corpus column.

    ``query`` is a normalized word histogram over the vocabulary (dense
    length-V array or ``SparseVector``); ``corpus`` is the column-normalized
    V x N document matrix; ``embeddings`` holds one vector per vocabulary
    word.
    """
    if isinstance(query, SparseVector):
        query = query.to_dense()
    query = np.asarray(query, dtype=np.float64)
    embeddings = np.ascontiguousarray(embeddings, dtype=np.float64)
    n_vocab = corpus.n_rows
    if query.shape != (n_vocab,) or embeddings.shape[0] != n_vocab:
        raise ValueError(
            f"shape mismatch: query {query.shape}, embeddings "
            f"{embeddings.shape}, corpus rows {n_vocab}"
        )
    ws = workspace if workspace is not None else SinkhornWorkspace()
    timings: dict[str, float] = {}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    sel, weights = kernels.select_nonzero(query)
    timings["select"] = time.perf_counter() - t0
    v_r = sel.size
    n_docs = corpus.n_cols

    t0 = time.perf_counter()
    cost = kernels.euclidean_rows(
        embeddings, sel, out=ws.matrix("cost", n_vocab, v_r), workers=config.workers
    )
    timings["distances"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mats = kernels.precompute(
        cost,
        weights,
        config.lam,
        buffers=(
            ws.matrix("kernel", n_vocab, v_r),
            ws.matrix("kernel_over_r", n_vocab, v_r),
            ws.matrix("kernel_cost", n_vocab, v_r),
        ),
        workers=config.workers,
    )
    timings["precompute"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    x = ws.matrix("x", n_docs, v_r)
    x.fill(1.0 / v_r)
    x_prev = ws.matrix("x_prev", n_docs, v_r)
    u = ws.matrix("u", n_docs, v_r)
    timings["init"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    iterations = 0
    converged = False
    for _ in range(config.max_iter):
        update_u(x, out=u)
        x, x_prev = x_prev, x
        x.fill(0.0)
        kernels.fused_iteration(
            corpus, mats, u, x,
            workers=config.workers, deterministic=config.deterministic,
        )
        iterations += 1
        if config.tol is not None:
            delta = float(np.max(np.abs(x - x_prev)))
            if delta < config.tol:
                converged = True
                break
    timings["iterations"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    update_u(x, out=u)
    wmd = kernels.fused_final(
        corpus, mats, u,
        workers=config.workers, deterministic=config.deterministic,
        out=ws.vector("wmd", n_docs),
    )
    timings["final"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    return SolverResult(
        wmd=wmd.copy(),
        iterations_run=iterations,
        converged=converged,
        timings=timings,
    )


def sinkhorn_wmd_batch(
    queries,
    corpus: CsrMatrix,
    embeddings: np.ndarray,
    config: SolverConfig,
    workspace: SinkhornWorkspace | None = None,
) -> list[SolverResult | Exception]:
    """Independent solves for several queries sharing one workspace.

    Each list entry is either the query's ``SolverResult`` or the exception
    it raised; one failing query never aborts the rest of the batch.
    """
    ws = workspace if workspace is not None else SinkhornWorkspace()
    results: list[SolverResult | Exception] = []
    for query in queries:
        try:
            results.append(sinkhorn_wmd(query, corpus, embeddings, config, workspace=ws))
        except (ValueError, ArithmeticError) as exc:
            results.append(exc)
    return results
