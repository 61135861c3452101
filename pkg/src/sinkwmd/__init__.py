"""Sinkhorn Word Movers Distance of one query document against a document batch.

The solver runs the Sinkhorn-Knopp scaling iteration on top of sparse
fused kernels (a sampled dense-dense product feeding a sparse-dense
product in a single pass over the corpus nonzeros).  A naive dense
implementation is included as a correctness oracle.
"""

import os

# The compiled kernels schedule work over explicit nonzero partitions, so a
# worker count above the physical core count must still be expressible as
# real OS threads.  Must run before numba is first imported.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 16)))
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")

from .sparse import (
    CsrMatrix,
    NnzPartition,
    SparseVector,
    StructuralError,
    csr_from_triplets,
    csr_validate,
    nnz_partition,
)
from .ingest import (
    Document,
    EmptyDocumentError,
    ParseError,
    Vocabulary,
    build_corpus_matrix,
    build_histogram,
    load_corpus,
    load_embeddings,
    preprocess,
)
from .kernels import (
    DegeneracyError,
    EmptyQueryError,
    SinkhornMatrices,
    euclidean_rows,
    fused_final,
    fused_iteration,
    precompute,
    sddmm,
    select_nonzero,
    spmm,
)
from .solver import (
    SinkhornWorkspace,
    SolverConfig,
    SolverResult,
    init_x,
    sinkhorn_wmd,
    sinkhorn_wmd_batch,
    update_u,
)
from .baseline import sinkhorn_wmd_dense, unfused_sparse_wmd

__version__ = "0.1.0"

__all__ = [
    "CsrMatrix",
    "DegeneracyError",
    "Document",
    "EmptyDocumentError",
    "EmptyQueryError",
    "NnzPartition",
    "ParseError",
    "SinkhornMatrices",
    "SinkhornWorkspace",
    "SolverConfig",
    "SolverResult",
    "SparseVector",
    "StructuralError",
    "Vocabulary",
    "build_corpus_matrix",
    "build_histogram",
    "csr_from_triplets",
    "csr_validate",
    "euclidean_rows",
    "fused_final",
    "fused_iteration",
    "init_x",
    "load_corpus",
    "load_embeddings",
    "nnz_partition",
    "precompute",
    "preprocess",
    "sddmm",
    "select_nonzero",
    "sinkhorn_wmd",
    "sinkhorn_wmd_batch",
    "sinkhorn_wmd_dense",
    "spmm",
    "unfused_sparse_wmd",
    "update_u",
]
