"""Self-validation: cross-checks the solver routes on seeded random inputs.

Used by the command-line ``validate`` mode.  Each check runs over a set of
random instances and reports its worst observed error; a check passes only
if every instance stays within its bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .baseline import sinkhorn_wmd_dense, unfused_sparse_wmd
from .solver import SolverConfig, sinkhorn_wmd
from .sparse import csr_validate, nnz_partition
from .synth import Instance, random_instance


@dataclass
class CheckResult:
    name: str
    instances: int
    max_rel_err: float
    bound: float
    passed: bool
    detail: str = ""


def _rel_err(got: np.ndarray, want: np.ndarray) -> float:
    denom = np.maximum(np.abs(want), np.finfo(np.float64).tiny)
    return float(np.max(np.abs(got - want) / denom))


def run_validation(
    seed: int = 0,
    instances: int = 20,
    mutate: Callable[[Instance], Instance] | None = None,
) -> list[CheckResult]:
    """Run the full agreement and invariant suite; returns one row per check.

    ``mutate`` is a test hook: it may replace each generated instance (for
    example with a corrupted corpus) before the checks run.
    """
    kernels.warmup()
    insts = [
        random_instance(seed + k, n_vocab=48, n_docs=12, v_r=6, dim=6, density=0.25)
        for k in range(instances)
    ]
    if mutate is not None:
        insts = [mutate(inst) for inst in insts]
    results: list[CheckResult] = []

    violations: list[str] = []
    for inst in insts:
        violations.extend(csr_validate(inst.corpus))
    results.append(
        CheckResult(
            "corpus structural invariants", len(insts),
            max_rel_err=float(len(violations)), bound=0.0,
            passed=not violations,
            detail=violations[0] if violations else "",
        )
    )
    if violations:
        return results  # numeric checks are meaningless on corrupt structure

    cfg = SolverConfig(lam=10.0, max_iter=15)
    err_fused = err_unfused = 0.0
    for inst in insts:
        dense = sinkhorn_wmd_dense(inst.query, inst.corpus.to_dense(),
                                   inst.embeddings, cfg)
        fused = sinkhorn_wmd(inst.query, inst.corpus, inst.embeddings, cfg).wmd
        unfused = unfused_sparse_wmd(inst.query, inst.corpus, inst.embeddings, cfg)
        err_fused = max(err_fused, _rel_err(fused, dense))
        err_unfused = max(err_unfused, _rel_err(unfused, dense))
    results.append(CheckResult("fused vs dense reference", len(insts),
                               err_fused, 1e-9, err_fused <= 1e-9))
    results.append(CheckResult("unfused vs dense reference", len(insts),
                               err_unfused, 1e-9, err_unfused <= 1e-9))

    det_exact = True
    err_atomic = 0.0
    for inst in insts:
        serial = sinkhorn_wmd(inst.query, inst.corpus, inst.embeddings, cfg).wmd
        for p in (2, 4):
            det = sinkhorn_wmd(
                inst.query, inst.corpus, inst.embeddings,
                SolverConfig(lam=cfg.lam, max_iter=cfg.max_iter,
                             workers=p, deterministic=True),
            ).wmd
            det_exact = det_exact and bool(np.array_equal(det, serial))
            atomic = sinkhorn_wmd(
                inst.query, inst.corpus, inst.embeddings,
                SolverConfig(lam=cfg.lam, max_iter=cfg.max_iter, workers=p),
            ).wmd
            err_atomic = max(err_atomic, _rel_err(atomic, serial))
    results.append(CheckResult("deterministic mode bitwise vs serial", len(insts),
                               0.0 if det_exact else 1.0, 0.0, det_exact))
    results.append(CheckResult("atomic mode vs serial", len(insts),
                               err_atomic, 1e-8, err_atomic <= 1e-8))

    part_bad = 0
    rng = np.random.default_rng(seed)
    for inst in insts:
        for p in rng.integers(1, 9, size=3):
            parts = nnz_partition(inst.corpus.row_ptr, inst.corpus.nnz, int(p))
            part_bad += _partition_violations(inst.corpus.row_ptr,
                                              inst.corpus.nnz, parts)
    results.append(CheckResult("nonzero partition invariants", len(insts),
                               float(part_bad), 0.0, part_bad == 0))
    return results


def _partition_violations(row_ptr, nnz, parts) -> int:
    bad = 0
    expect_begin = 0
    base = nnz // len(parts)
    for part in parts:
        if part.nnz_begin != expect_begin:
            bad += 1
        if part.size not in (base, base + 1):
            bad += 1
        if part.size > 0:
            if not (row_ptr[part.start_row] <= part.nnz_begin < row_ptr[part.start_row + 1]):
                bad += 1
        expect_begin = part.nnz_end
    if expect_begin != nnz:
        bad += 1
    return bad


def format_report(results: list[CheckResult]) -> str:
    lines = []
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"[{status}] {r.name:<{width}}  instances={r.instances:<3d} "
            f"max_err={r.max_rel_err:.3e} bound={r.bound:.1e}"
            + (f"  ({r.detail})" if r.detail else "")
        )
    n_fail = sum(not r.passed for r in results)
    lines.append(
        f"{len(results) - n_fail}/{len(results)} checks passed"
        + (f", {n_fail} FAILED" if n_fail else "")
    )
    return "\n".join(lines)
