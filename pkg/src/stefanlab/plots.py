"""Optional figure rendering: self-contained SVG files next to the CSV data."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

VERDICT_COLORS = {"Spreading": "#2166ac", "Vanishing": "#b2182b",
                  "Inconclusive": "#999999"}


def save_trajectory_plot(traj, path: str) -> str:
    """Front position and population maxima over time."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(traj.t, traj.h, lw=1.2, color="#2166ac")
    ax1.set_ylabel("front position h(t)")
    ax1.grid(alpha=0.3)
    ax2.semilogy(traj.t, np.maximum(traj.u_max, 1e-300), lw=1.0,
                 color="#b2182b", label="sup u")
    if traj.coupled:
        ax2.semilogy(traj.t, np.maximum(traj.v_max, 1e-300), lw=1.0,
                     color="#4d9221", label="sup v")
    ax2.set_xlabel("t")
    ax2.set_ylabel("population maxima")
    ax2.legend(loc="best", fontsize=8)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def save_verdict_map(rows, p1_name: str, p2_name: str | None,
                     path: str) -> str:
    """Scatter of verdicts over the swept parameter grid."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for verdict in ("Vanishing", "Inconclusive", "Spreading"):
        xs = [r[1] for r in rows if r[4] == verdict]
        ys = [(r[3] if p2_name else 0.0) for r in rows if r[4] == verdict]
        if xs:
            ax.scatter(xs, ys, s=60, marker="s",
                       color=VERDICT_COLORS[verdict], label=verdict)
    ax.set_xlabel(p1_name)
    ax.set_ylabel(p2_name or "")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def save_profile_plot(radii, values, path: str, ylabel: str = "value") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(radii, values, lw=1.2)
    ax.set_xlabel("r")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
