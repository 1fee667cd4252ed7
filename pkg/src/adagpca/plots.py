"""Matplotlib report figures rendered to files next to the data artifacts.

Nothing here is interactive; every function returns a Figure the CLI saves
with a standard dpi.  The browser explorer handles interactivity.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METHOD_STYLE = {
    "pca": dict(color="#666666", marker="o", label="PCA"),
    "gpca_kernel": dict(color="#1f77b4", marker="s", label="kernel gPCA"),
    "adaptive": dict(color="#d62728", marker="^", label="adaptive"),
}


def _axis_label(doc: dict, axis: int) -> str:
    fracs = doc.get("variance_fractions") or []
    if axis < len(fracs):
        return f"axis {axis + 1} ({100 * fracs[axis]:.1f}%)"
    return f"axis {axis + 1}"


def ordination_figure(doc: dict, color_by: str = None, axes_pair=(0, 1)):
    """Side-by-side sample and variable scatter of one ordination doc."""
    i, j = axes_pair
    fig, (ax_s, ax_v) = plt.subplots(1, 2, figsize=(11, 5))

    samples = doc["samples"]
    xs = np.array([s["coords"][i] for s in samples])
    ys = np.array([s["coords"][j] if len(s["coords"]) > j else 0.0 for s in samples])
    if color_by:
        values = [s.get("metadata", {}).get(color_by) for s in samples]
        levels = sorted({str(v) for v in values})
        cmap = plt.get_cmap("tab10")
        for idx, level in enumerate(levels):
            mask = np.array([str(v) == level for v in values])
            ax_s.scatter(xs[mask], ys[mask], s=18, color=cmap(idx % 10), label=level)
        ax_s.legend(title=color_by, fontsize=8)
    else:
        ax_s.scatter(xs, ys, s=18, color="#1f77b4")
    ax_s.set_title("samples")

    variables = doc["variables"]
    vx = [v["coords"][i] for v in variables]
    vy = [v["coords"][j] if len(v["coords"]) > j else 0.0 for v in variables]
    ax_v.scatter(vx, vy, s=8, color="#2ca02c", alpha=0.6)
    ax_v.set_title("variables")

    for ax in (ax_s, ax_v):
        ax.axhline(0, lw=0.5, color="0.8")
        ax.axvline(0, lw=0.5, color="0.8")
        ax.set_xlabel(_axis_label(doc, i))
        ax.set_ylabel(_axis_label(doc, j))
    r = doc.get("r")
    if r is not None:
        fig.suptitle(f"{doc.get('method', 'ordination')} (r = {r:.4g})")
    else:
        fig.suptitle(doc.get("method", "ordination"))
    fig.tight_layout()
    return fig


def profile_figure(profile_trace, r_hat: float = None):
    """Profile log-likelihood over the smoothing parameter."""
    fig, ax = plt.subplots(figsize=(6, 3.2))
    rs = [pt[0] for pt in profile_trace]
    lls = [pt[1] for pt in profile_trace]
    ax.plot(rs, lls, lw=1.2, color="#1f77b4")
    if r_hat is not None:
        ax.axvline(r_hat, color="#d62728", lw=1.0, ls="--", label=f"selected r = {r_hat:.4g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("r")
    ax.set_ylabel("profile log-likelihood")
    fig.tight_layout()
    return fig


def sim_figure(aggregate_rows, metric: str = "mean_axis_corr"):
    """Method comparison curves, one panel per noise level."""
    sigmas = sorted({row["sigma"] for row in aggregate_rows})
    fig, axes = plt.subplots(1, len(sigmas), figsize=(3.6 * len(sigmas), 3.4), squeeze=False)
    for ax, sigma in zip(axes[0], sigmas):
        for method, style in _METHOD_STYLE.items():
            pts = sorted(
                (row["m_or_branch_size"], row[metric])
                for row in aggregate_rows
                if row["sigma"] == sigma and row["method"] == method and row[metric] is not None
            )
            if pts:
                ax.plot([p[0] for p in pts], [p[1] for p in pts], lw=1.2, ms=4, **style)
        ax.set_title(f"sigma = {sigma:g}")
        ax.set_xlabel("axis span / clade size")
        ax.set_ylim(0, 1.05)
    axes[0][0].set_ylabel(metric.replace("_", " "))
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    return fig


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=150)
    plt.close(fig)
