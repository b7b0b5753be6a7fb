"""Diagnostic figures rendered straight to files.

Matplotlib is imported lazily with the Agg backend so that library use and
headless runs never touch a display.
"""

from __future__ import annotations

from typing import Sequence

from .diagnostics import DiagnosticsRecord


def render_diagnostics(
    records: Sequence[DiagnosticsRecord],
    path: str,
    title: str | None = None,
) -> None:
    """Render the recorded time series as a 2x2 panel figure saved to ``path``.

    Panels: area over time, worst projection Jacobian over time, max speed
    on a log scale, and either the det df corridor (when recorded) or the
    two-dilation and gradient extremes.
    """
    if not records:
        raise ValueError("no records to plot")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = [r.t for r in records]
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.5))

    ax = axes[0, 0]
    ax.plot(t, [r.area for r in records], color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("area")
    ax.set_title("graph area")

    ax = axes[0, 1]
    ax.plot(t, [r.min_j for r in records], color="tab:green")
    ax.set_xlabel("t")
    ax.set_ylabel("min J")
    ax.set_title("worst projection Jacobian")

    ax = axes[1, 0]
    speeds = [max(r.max_speed, 1e-300) for r in records]
    ax.semilogy(t, speeds, color="tab:red")
    ax.set_xlabel("t")
    ax.set_ylabel("max |velocity|")
    ax.set_title("stationarity")

    ax = axes[1, 1]
    if records[0].min_det2 is not None:
        ax.plot(t, [r.min_det2 for r in records], label="min det df")
        ax.plot(t, [r.max_det2 for r in records], label="max det df")
        ax.axhline(1.0, color="gray", linewidth=0.8, linestyle="--")
        ax.set_ylabel("det df")
        ax.set_title("det df corridor")
    else:
        ax.plot(t, [r.max_two_dilation for r in records], label="max two-dilation")
        ax.plot(t, [r.max_grad for r in records], label="max |df|")
        ax.set_ylabel("value")
        ax.set_title("dilation and gradient")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
