"""Load word embeddings and documents; build histograms and the corpus matrix.

File formats:
  * embeddings: whitespace-separated text, optional ``count dim`` header,
    then one word followed by its vector per line;
  * corpus: one document per line, line number == doc_id; an optional
    ``label,`` prefix per line can be stripped;
  * stop words: one word per line.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .sparse import CsrMatrix, SparseVector, csr_from_triplets


class ParseError(ValueError):
    """Raised for malformed input files; carries the 1-based line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class EmptyDocumentError(ValueError):
    """Raised when a document has no in-vocabulary tokens left."""


# Small pinned English stop-word list so preprocessing is deterministic.
# Override with a custom file via read_stopwords().
DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are aren as at be because
been before being below between both but by can cannot could couldn d did didn
do does doesn doing don down during each few for from further had hadn has hasn
have haven having he her here hers herself him himself his how i if in into is
isn it its itself just ll m me more most my myself no nor not now o of off on
once only or other our ours ourselves out over own re s same she should shouldn
so some such t than that the their theirs them themselves then there these they
this those through to too under until up ve very was wasn we were weren what
when where which while who whom why will with won would wouldn y you your yours
yourself yourselves
""".split())

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class Vocabulary:
    """Bidirectional word <-> integer-id map with embedding metadata."""

    words: tuple[str, ...]
    index: dict
    embedding_dim: int

    @classmethod
    def from_words(cls, words: Iterable[str], embedding_dim: int) -> "Vocabulary":
        words = tuple(words)
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            raise ValueError("vocabulary words must be unique")
        return cls(words, index, embedding_dim)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


@dataclass(frozen=True)
class Document:
    """A preprocessed document: lowercase tokens with stop words removed."""

    doc_id: int
    tokens: tuple[str, ...]


def load_embeddings(path, vocab_limit: int | None = None) -> tuple[Vocabulary, np.ndarray]:
    """Read a text embedding file into a vocabulary and a dense matrix.

    Returns ``(vocab, vecs)`` where ``vecs[i]`` is the embedding of word
    ``vocab.words[i]``.  Keeps the first ``vocab_limit`` distinct words in
    file order.  Duplicate words keep their first vector; a single warning
    reports how many duplicates were dropped.
    """
    path = Path(path)
    words: list[str] = []
    seen: dict[str, int] = {}
    rows: list[np.ndarray] = []
    dim: int | None = None
    duplicates = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if line_no == 1 and len(parts) == 2 and _is_int(parts[0]) and _is_int(parts[1]):
                continue  # "count dim" header
            word, fields = parts[0], parts[1:]
            if not fields:
                raise ParseError(path, line_no, "no embedding values on line")
            if dim is None:
                dim = len(fields)
            elif len(fields) != dim:
                raise ParseError(
                    path, line_no, f"expected {dim} values, found {len(fields)}"
                )
            if word in seen:
                duplicates += 1
                continue
            try:
                vec = np.array(fields, dtype=np.float64)
            except ValueError:
                raise ParseError(path, line_no, "embedding values must be floats") from None
            seen[word] = len(words)
            words.append(word)
            rows.append(vec)
            if vocab_limit is not None and len(words) >= vocab_limit:
                break
    if not words:
        raise ParseError(path, 0, "no embeddings found")
    if duplicates:
        warnings.warn(f"{path}: {duplicates} duplicate words ignored (first kept)")
    vecs = np.vstack(rows)
    return Vocabulary.from_words(words, int(vecs.shape[1])), vecs


def _is_int(token: str) -> bool:
    try:
        int(token)
    except ValueError:
        return False
    return True


def preprocess(raw_text: str, stopwords: frozenset = DEFAULT_STOPWORDS) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop stop words."""
    return [
        tok
        for tok in _TOKEN_SPLIT.split(raw_text.lower())
        if tok and tok not in stopwords
    ]


def read_stopwords(path) -> frozenset:
    """Read a stop-word file, one word per line."""
    with Path(path).open("r", encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


def load_corpus(path, stopwords: frozenset = DEFAULT_STOPWORDS,
                label_prefix: bool = False) -> list[Document]:
    """Read one document per line; the line index (0-based) is the doc_id.

    With ``label_prefix`` the text up to and including the first comma is
    discarded (``label,text`` corpora).
    """
    docs: list[Document] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for doc_id, line in enumerate(fh):
            if label_prefix:
                _, _, line = line.partition(",")
            docs.append(Document(doc_id, tuple(preprocess(line, stopwords))))
    return docs


def build_histogram(doc: Document, vocab: Vocabulary) -> tuple[SparseVector, int]:
    """Normalized in-vocabulary token counts for one document.

    Returns ``(histogram, skipped)`` where ``skipped`` counts tokens that
    were not in the vocabulary and carry no mass.  The histogram sums to 1
    over the in-vocabulary tokens.
    """
    counts: dict[int, int] = {}
    skipped = 0
    for tok in doc.tokens:
        word_id = vocab.index.get(tok)
        if word_id is None:
            skipped += 1
        else:
            counts[word_id] = counts.get(word_id, 0) + 1
    if not counts:
        raise EmptyDocumentError(
            f"document {doc.doc_id} has no in-vocabulary tokens"
        )
    total = sum(counts.values())
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64) / total
    return SparseVector(len(vocab), indices, values), skipped


def build_corpus_matrix(docs: list[Document], vocab: Vocabulary) -> CsrMatrix:
    """Column-normalized word-frequency matrix, one column per document.

    Shape is ``len(vocab) x len(docs)``; column ``j`` is document ``j``'s
    normalized histogram and sums to 1.
    """
    triplets: list[tuple[int, int, float]] = []
    for j, doc in enumerate(docs):
        try:
            hist, _ = build_histogram(doc, vocab)
        except EmptyDocumentError:
            raise EmptyDocumentError(
                f"document {doc.doc_id} is empty after vocabulary filtering"
            ) from None
        triplets.extend(
            (int(i), j, float(v)) for i, v in zip(hist.indices, hist.values)
        )
    return csr_from_triplets(triplets, len(vocab), len(docs))
