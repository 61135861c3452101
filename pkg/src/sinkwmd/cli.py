"""Command-line front end.

Three modes:
  * ``solve``: distances of each query document against a corpus, CSV out;
  * ``bench``: fused-vs-unfused timing sweep on synthetic data, with a
    delimited table and rendered figures;
  * ``validate``: cross-check suite on seeded random instances.

Exit codes: 0 success, 1 validation failure, 2 file or format errors,
3 numerical degeneracy (the offending query is named on stderr).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import bench as bench_mod
from . import validation
from .ingest import (
    DEFAULT_STOPWORDS,
    EmptyDocumentError,
    ParseError,
    build_corpus_matrix,
    build_histogram,
    load_corpus,
    load_embeddings,
    read_stopwords,
)
from .kernels import DegeneracyError, EmptyQueryError
from .solver import SolverConfig, SolverResult, sinkhorn_wmd_batch

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


@dataclass
class RunManifest:
    """Everything one invocation needs; fields unused by a mode stay None."""

    mode: str
    embedding_path: str | None = None
    corpus_path: str | None = None
    queries: str | None = None
    lam: float | None = None
    max_iter: int = 15
    tol: float | None = None
    workers: int = 1
    deterministic: bool = False
    output_path: str | None = None
    seed: int = 0
    label_prefix: bool = False
    stopword_path: str | None = None
    vocab_limit: int | None = None
    instances: int = 20
    repeats: int = 5
    n_vocab: int = 10_000
    n_docs: int = 1_000
    density: float = 0.003
    v_r: int = 19
    dim: int = 300

    def validate(self) -> None:
        required = {
            "solve": ("embedding_path", "corpus_path", "queries", "lam", "output_path"),
            "bench": ("output_path",),
            "validate": (),
        }[self.mode]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.mode} mode requires: {', '.join(missing)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinkwmd",
        description="Entropy-regularized Word Movers Distance, one query vs many documents",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    hw = os.cpu_count() or 1

    solve = sub.add_parser("solve", help="compute distances, write CSV")
    solve.add_argument("--embeddings", required=True, help="word embedding text file")
    solve.add_argument("--corpus", required=True, help="one target document per line")
    solve.add_argument("--queries", required=True,
                       help="comma-separated corpus line indices, or a document file")
    solve.add_argument("--lambda", dest="lam", type=float, required=True,
                       help="entropy regularization strength")
    solve.add_argument("--max-iter", type=int, default=15)
    solve.add_argument("--tol", type=float, default=None,
                       help="early-exit threshold on the iterate change (max norm)")
    solve.add_argument("--workers", type=int, default=hw)
    solve.add_argument("--deterministic", action="store_true",
                       help="bitwise-reproducible parallel mode")
    solve.add_argument("--out", required=True, help="output CSV path")
    solve.add_argument("--label-prefix", action="store_true",
                       help="strip a leading 'label,' from every corpus line")
    solve.add_argument("--stopwords", default=None, help="stop-word file override")
    solve.add_argument("--vocab-limit", type=int, default=None)

    bench = sub.add_parser("bench", help="fused vs unfused timing sweep")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--vocab-size", dest="n_vocab", type=int, default=10_000)
    bench.add_argument("--docs", dest="n_docs", type=int, default=1_000)
    bench.add_argument("--density", type=float, default=0.003)
    bench.add_argument("--query-size", dest="v_r", type=int, default=19)
    bench.add_argument("--dim", type=int, default=300)
    bench.add_argument("--lambda", dest="lam", type=float, default=10.0)
    bench.add_argument("--max-iter", type=int, default=15)
    bench.add_argument("--workers", type=int, default=hw,
                       help="top of the worker sweep {1, 2, 4, ...}")
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--out", required=True, help="output directory")

    check = sub.add_parser("validate", help="self-check on random instances")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--instances", type=int, default=20)
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    fields = dict(mode=args.mode)
    if args.mode == "solve":
        fields.update(
            embedding_path=args.embeddings, corpus_path=args.corpus,
            queries=args.queries, lam=args.lam, max_iter=args.max_iter,
            tol=args.tol, workers=args.workers, deterministic=args.deterministic,
            output_path=args.out, label_prefix=args.label_prefix,
            stopword_path=args.stopwords, vocab_limit=args.vocab_limit,
        )
    elif args.mode == "bench":
        fields.update(
            seed=args.seed, n_vocab=args.n_vocab, n_docs=args.n_docs,
            density=args.density, v_r=args.v_r, dim=args.dim, lam=args.lam,
            max_iter=args.max_iter, workers=args.workers, repeats=args.repeats,
            output_path=args.out,
        )
    else:
        fields.update(seed=args.seed, instances=args.instances)
    return RunManifest(**fields)


def _parse_query_spec(spec: str) -> list[int] | None:
    """Comma-separated line indices, or None when the spec is a file path."""
    parts = [p.strip() for p in spec.split(",")]
    if all(p.lstrip("-").isdigit() for p in parts if p):
        return [int(p) for p in parts if p]
    return None


def cmd_solve(manifest: RunManifest) -> int:
    stopwords = (read_stopwords(manifest.stopword_path)
                 if manifest.stopword_path else DEFAULT_STOPWORDS)
    vocab, vecs = load_embeddings(manifest.embedding_path, manifest.vocab_limit)
    corpus_docs = load_corpus(manifest.corpus_path, stopwords, manifest.label_prefix)
    corpus = build_corpus_matrix(corpus_docs, vocab)

    indices = _parse_query_spec(manifest.queries)
    if indices is not None:
        bad = [i for i in indices if i < 0 or i >= len(corpus_docs)]
        if bad:
            raise ParseError(manifest.corpus_path, bad[0],
                             f"query index {bad[0]} out of range")
        query_docs = [corpus_docs[i] for i in indices]
        query_ids = indices
    else:
        query_docs = load_corpus(manifest.queries, stopwords, manifest.label_prefix)
        query_ids = [doc.doc_id for doc in query_docs]

    histograms = []
    for qid, doc in zip(query_ids, query_docs):
        try:
            hist, _ = build_histogram(doc, vocab)
        except EmptyDocumentError as exc:
            raise EmptyQueryError(f"query {qid}: {exc}") from None
        histograms.append(hist)

    config = SolverConfig(
        lam=manifest.lam, max_iter=manifest.max_iter, tol=manifest.tol,
        workers=manifest.workers, deterministic=manifest.deterministic,
    )
    results = sinkhorn_wmd_batch(histograms, corpus, vecs, config)
    failed = [(qid, res) for qid, res in zip(query_ids, results)
              if not isinstance(res, SolverResult)]
    if failed:
        for qid, exc in failed:
            print(f"query {qid}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    out_path = Path(manifest.output_path)
    with out_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "doc_id", "wmd", "iterations"])
        for qid, res in zip(query_ids, results):
            for doc_id, value in enumerate(res.wmd):
                writer.writerow([qid, doc_id, repr(float(value)),
                                 res.iterations_run])
    print(f"wrote {sum(r.wmd.size for r in results)} rows to {out_path}")
    return EXIT_OK


def cmd_bench(manifest: RunManifest) -> int:
    report = bench_mod.run_bench(
        seed=manifest.seed, n_vocab=manifest.n_vocab, n_docs=manifest.n_docs,
        density=manifest.density, v_r=manifest.v_r, dim=manifest.dim,
        lam=manifest.lam, max_iter=manifest.max_iter,
        max_workers=manifest.workers, repeats=manifest.repeats,
    )
    print(bench_mod.format_report(report))
    written = bench_mod.write_outputs(report, manifest.output_path)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(manifest: RunManifest) -> int:
    results = validation.run_validation(seed=manifest.seed,
                                        instances=manifest.instances)
    print(validation.format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    manifest = manifest_from_args(args)
    try:
        manifest.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    handlers = {"solve": cmd_solve, "bench": cmd_bench, "validate": cmd_validate}
    try:
        return handlers[manifest.mode](manifest)
    except (ParseError, EmptyDocumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DegeneracyError, EmptyQueryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
