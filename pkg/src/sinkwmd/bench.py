"""Benchmark harness: fused vs unfused timing across a worker sweep.

Generates a seeded synthetic instance, times both solver variants for each
worker count, and emits a delimited table plus rendered figures.  Each
(variant, workers, phase) cell is the median over the repeat runs.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from . import figures, kernels
from .baseline import unfused_sparse_wmd
from .solver import SolverConfig, SinkhornWorkspace, sinkhorn_wmd
from .synth import random_instance

PHASES = ("select", "distances", "precompute", "init", "iterations", "final", "total")


@dataclass
class BenchReport:
    """Median per-phase seconds keyed by (variant, workers, phase)."""

    workers: list[int]
    cells: dict[tuple[str, int, str], float]
    meta: dict = field(default_factory=dict)

    def total(self, variant: str, workers: int) -> float:
        return self.cells[(variant, workers, "total")]

    def ratio(self, workers: int, phase: str = "total") -> float:
        return self.cells[("unfused", workers, phase)] / self.cells[("fused", workers, phase)]


def worker_sweep(max_workers: int) -> list[int]:
    """Powers of two up to ``max_workers``, always including the maximum."""
    sweep = []
    w = 1
    while w < max_workers:
        sweep.append(w)
        w *= 2
    sweep.append(max_workers)
    return sweep


def run_bench(
    seed: int = 0,
    n_vocab: int = 10_000,
    n_docs: int = 1_000,
    density: float = 0.003,
    v_r: int = 19,
    dim: int = 300,
    lam: float = 10.0,
    max_iter: int = 15,
    max_workers: int = 8,
    repeats: int = 5,
) -> BenchReport:
    kernels.warmup()
    inst = random_instance(seed, n_vocab=n_vocab, n_docs=n_docs, v_r=v_r,
                           dim=dim, density=density)
    sweep = worker_sweep(max_workers)
    cells: dict[tuple[str, int, str], float] = {}
    ws = SinkhornWorkspace()
    for workers in sweep:
        cfg = SolverConfig(lam=lam, max_iter=max_iter, workers=workers)
        samples: dict[str, list[dict[str, float]]] = {"fused": [], "unfused": []}
        for _ in range(repeats):
            result = sinkhorn_wmd(inst.query, inst.corpus, inst.embeddings, cfg,
                                  workspace=ws)
            samples["fused"].append(result.timings)
            timings: dict[str, float] = {}
            unfused_sparse_wmd(inst.query, inst.corpus, inst.embeddings, cfg,
                               timings=timings)
            samples["unfused"].append(timings)
        for variant, runs in samples.items():
            for phase in PHASES:
                cells[(variant, workers, phase)] = statistics.median(
                    run[phase] for run in runs
                )
    return BenchReport(
        workers=sweep,
        cells=cells,
        meta=dict(seed=seed, n_vocab=n_vocab, n_docs=n_docs, density=density,
                  v_r=v_r, dim=dim, lam=lam, max_iter=max_iter,
                  nnz=inst.corpus.nnz, repeats=repeats),
    )


def write_bench_csv(report: BenchReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "workers", "phase", "seconds"])
        for variant in ("fused", "unfused"):
            for workers in report.workers:
                for phase in PHASES:
                    writer.writerow(
                        [variant, workers, phase,
                         repr(report.cells[(variant, workers, phase)])]
                    )
    return path


def format_report(report: BenchReport) -> str:
    meta = report.meta
    lines = [
        "benchmark instance: "
        f"V={meta['n_vocab']} N={meta['n_docs']} nnz={meta['nnz']} "
        f"v_r={meta['v_r']} dim={meta['dim']} lam={meta['lam']} "
        f"max_iter={meta['max_iter']} seed={meta['seed']} "
        f"(median of {meta['repeats']} runs)",
        "",
        f"{'workers':>7}  {'fused[s]':>10}  {'unfused[s]':>10}  "
        f"{'fusion x':>8}  {'loop x':>7}  {'scaling x':>9}",
    ]
    base = report.total("fused", report.workers[0])
    for w in report.workers:
        lines.append(
            f"{w:>7}  {report.total('fused', w):>10.4f}  "
            f"{report.total('unfused', w):>10.4f}  "
            f"{report.ratio(w):>8.2f}  {report.ratio(w, 'iterations'):>7.2f}  "
            f"{base / report.total('fused', w):>9.2f}"
        )
    lines.append("")
    lines.append("per-phase seconds (fused | unfused):")
    header = f"{'workers':>7}"
    for phase in PHASES[:-1]:
        header += f"  {phase:>12}"
    lines.append(header)
    for w in report.workers:
        row = f"{w:>7}"
        for phase in PHASES[:-1]:
            row += (f"  {report.cells[('fused', w, phase)]:>5.4f}"
                    f"|{report.cells[('unfused', w, phase)]:<6.4f}")
        lines.append(row)
    return "\n".join(lines)


def write_outputs(report: BenchReport, out_dir) -> list[Path]:
    """CSV, text report and rendered figures, side by side in ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_bench_csv(report, out_dir / "bench.csv")]
    text = format_report(report)
    (out_dir / "bench.txt").write_text(text + "\n")
    written.append(out_dir / "bench.txt")
    ratios_total = [report.ratio(w) for w in report.workers]
    ratios_loop = [report.ratio(w, "iterations") for w in report.workers]
    written.append(
        figures.render_fusion_speedup(report.workers, ratios_total, ratios_loop,
                                      out_dir / "speedup_fusion.png")
    )
    written.append(
        figures.render_strong_scaling(
            report.workers,
            [report.total("fused", w) for w in report.workers],
            [report.total("unfused", w) for w in report.workers],
            out_dir / "strong_scaling.png",
        )
    )
    return written
