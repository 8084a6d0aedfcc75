"""Figure rendering for sweep reports (written next to the CSV/JSON)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_sweep(rows: list[dict], axis: str, out_path):
    """Line plot of dataset IoU (and precision/recall) against the swept axis."""
    values = [r["value"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(values, [r["iou"] for r in rows], "o-", label="IoU")
    ax.plot(values, [r["precision"] for r in rows], "s--", label="precision")
    ax.plot(values, [r["recall"] for r in rows], "^--", label="recall")
    ax.set_xlabel(axis.replace("_", " "))
    ax.set_ylabel("dataset score")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
