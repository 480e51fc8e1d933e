"""Render experiment figures to files alongside the CSV outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ExperimentResult

_CASE_STYLE = {
    "ideal-20ms": dict(color="C0", ls="-"),
    "slow-300ms": dict(color="C3", ls="--"),
    "anytime-20ms": dict(color="C2", ls="-."),
}


def save_ise_figure(result: ExperimentResult, path: str | Path) -> Path:
    """Cumulative ISE per task, one panel per task, one curve per case."""
    path = Path(path)
    fig, axes = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    for row, tid in enumerate((1, 2)):
        ax = axes[row]
        for case in result.cases:
            trace = result.traces[(case, tid)]
            style = _CASE_STYLE.get(case, {})
            ax.plot(trace.t, trace.ise, label=case, **style)
        ax.set_ylabel(f"ISE, task {tid}")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="lower right", fontsize=9)
    axes[-1].set_xlabel("time [s]")
    fig.suptitle("Tracking cost under the three compute models")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_tracking_figure(result: ExperimentResult, path: str | Path) -> Path:
    """Tracked output and applied input per task for every case."""
    path = Path(path)
    fig, axes = plt.subplots(2, 2, figsize=(10.0, 6.0), sharex=True)
    for col, tid in enumerate((1, 2)):
        for case in result.cases:
            trace = result.traces[(case, tid)]
            style = _CASE_STYLE.get(case, {})
            axes[0][col].plot(trace.t, trace.y, label=case, **style)
            axes[1][col].plot(trace.t, trace.u, label=case, **style)
        axes[0][col].plot(trace.t, trace.ref, color="k", lw=0.8, alpha=0.6, label="reference")
        axes[0][col].set_title(f"task {tid}")
        axes[0][col].grid(True, alpha=0.3)
        axes[1][col].grid(True, alpha=0.3)
        axes[1][col].set_xlabel("time [s]")
    axes[0][0].set_ylabel("tracked output")
    axes[1][0].set_ylabel("input")
    axes[0][1].legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_sweep_figure(scales: Sequence[float],
                      finals: Dict[int, List[float]],
                      path: str | Path) -> Path:
    """Final ISE versus compute-budget scale, one curve per task."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for tid, values in sorted(finals.items()):
        ax.plot(scales, values, marker="o", label=f"task {tid}")
    ax.set_xscale("log")
    ax.set_xlabel("budget scale")
    ax.set_ylabel("final ISE")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
