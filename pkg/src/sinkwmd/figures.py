"""Benchmark figure rendering (file output only, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_RC = {
    "figure.figsize": (4.8, 3.2),
    "figure.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.linestyle": ":",
    "grid.alpha": 0.6,
    "legend.fontsize": 8,
    "savefig.bbox": "tight",
}


def render_fusion_speedup(workers: list[int], ratios_total: list[float],
                          ratios_loop: list[float], path) -> Path:
    """Unfused-over-fused wall-time ratio against the worker count."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(workers, ratios_total, "o-", label="whole solve")
        ax.plot(workers, ratios_loop, "s--", label="iteration loop")
        ax.axhline(1.0, color="gray", linewidth=0.8)
        ax.set_xscale("log", base=2)
        ax.set_xticks(workers, [str(w) for w in workers])
        ax.set_xlabel("workers")
        ax.set_ylabel("unfused time / fused time")
        ax.set_title("Speedup from kernel fusion")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return path


def render_strong_scaling(workers: list[int], fused_totals: list[float],
                          unfused_totals: list[float], path) -> Path:
    """Wall time against worker count for both variants, with the ideal line."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(workers, fused_totals, "o-", label="fused")
        ax.plot(workers, unfused_totals, "s--", label="unfused")
        ideal = [fused_totals[0] / (w / workers[0]) for w in workers]
        ax.plot(workers, ideal, ":", color="gray", label="ideal")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xticks(workers, [str(w) for w in workers])
        ax.set_xlabel("workers")
        ax.set_ylabel("wall time [s]")
        ax.set_title("Strong scaling, one query")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return path
