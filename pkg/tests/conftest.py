"""Shared fixtures and helpers."""

import numpy as np
import pytest

from sinkwmd import kernels
from sinkwmd.sparse import CsrMatrix, csr_from_triplets


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Compile (or load cached) kernels once so tests never time JIT work."""
    kernels.warmup()


def column_subset(corpus: CsrMatrix, cols: np.ndarray) -> CsrMatrix:
    """Corpus restricted to the given columns, renumbered in given order."""
    remap = {int(c): k for k, c in enumerate(cols)}
    triplets = [
        (i, remap[j], v) for i, j, v in corpus.to_triplets() if j in remap
    ]
    return csr_from_triplets(triplets, corpus.n_rows, len(cols))


def max_rel_err(got: np.ndarray, want: np.ndarray) -> float:
    denom = np.maximum(np.abs(want), np.finfo(np.float64).tiny)
    return float(np.max(np.abs(got - want) / denom))
