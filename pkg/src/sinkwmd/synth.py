"""Seeded synthetic instances for benchmarks, self-validation and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix, csr_from_triplets


@dataclass(frozen=True)
class Instance:
    """A random solver input: embeddings, corpus matrix and one query."""

    embeddings: np.ndarray
    corpus: CsrMatrix
    query: np.ndarray

    @property
    def n_vocab(self) -> int:
        return self.corpus.n_rows

    @property
    def n_docs(self) -> int:
        return self.corpus.n_cols


def random_corpus(
    rng: np.random.Generator,
    n_vocab: int,
    n_docs: int,
    density: float,
) -> CsrMatrix:
    """Column-normalized random corpus with no empty columns.

    Every column receives at least one nonzero; the expected nonzero count
    is ``density * n_vocab * n_docs``.
    """
    per_col = max(1, round(density * n_vocab))
    triplets: list[tuple[int, int, float]] = []
    for j in range(n_docs):
        k = min(n_vocab, max(1, int(rng.poisson(per_col))))
        rows = rng.choice(n_vocab, size=k, replace=False)
        vals = rng.random(k) + 0.1
        vals /= vals.sum()
        triplets.extend((int(i), j, float(v)) for i, v in zip(rows, vals))
    return csr_from_triplets(triplets, n_vocab, n_docs)


def random_query(rng: np.random.Generator, n_vocab: int, v_r: int) -> np.ndarray:
    """Normalized histogram with exactly ``v_r`` positive entries."""
    sel = rng.choice(n_vocab, size=min(v_r, n_vocab), replace=False)
    vals = rng.random(sel.size) + 0.1
    vals /= vals.sum()
    query = np.zeros(n_vocab, dtype=np.float64)
    query[sel] = vals
    return query


def random_instance(
    seed: int,
    n_vocab: int = 64,
    n_docs: int = 16,
    v_r: int = 8,
    dim: int = 8,
    density: float = 0.2,
) -> Instance:
    rng = np.random.default_rng(seed)
    embeddings = rng.normal(size=(n_vocab, dim))
    corpus = random_corpus(rng, n_vocab, n_docs, density)
    query = random_query(rng, n_vocab, v_r)
    return Instance(embeddings, corpus, query)
