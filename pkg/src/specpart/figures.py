"""Matplotlib renderings of a run: partition map, field panels, trace curves.

All figures are written straight to files (Agg backend); nothing is shown
interactively.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import _triangle_labels  # noqa: E402


def _triangulation(mesh):
    return mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1],
                              mesh.triangles)


def save_partition_figure(path, mesh, masks, dpi=150) -> None:
    """Group-label map with the mesh interfaces."""
    tri = _triangulation(mesh)
    labels = _triangle_labels(np.asarray(masks, dtype=bool), mesh)
    fig, ax = plt.subplots(figsize=(5, 5))
    pc = ax.tripcolor(tri, facecolors=labels.astype(float), cmap="tab10",
                      vmin=-1.5, vmax=8.5)
    ax.set_aspect("equal")
    ax.set_title("partition")
    fig.colorbar(pc, ax=ax, shrink=0.8, label="group")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_fields_figure(path, mesh, state, dpi=150) -> None:
    """One panel per field, groups as rows."""
    tri = _triangulation(mesh)
    m = state.m
    kmax = max(state.group_sizes)
    fig, axes = plt.subplots(m, kmax, figsize=(3.2 * kmax, 3.0 * m),
                             squeeze=False)
    for i, U in enumerate(state.groups):
        for j in range(kmax):
            ax = axes[i][j]
            if j >= U.shape[1]:
                ax.axis("off")
                continue
            v = U[:, j]
            scale = np.abs(v).max() or 1.0
            ax.tricontourf(tri, v, levels=21, cmap="RdBu_r",
                           vmin=-scale, vmax=scale)
            ax.set_aspect("equal")
            ax.set_title(f"group {i}, field {j}", fontsize=9)
            ax.set_xticks([])
            ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_trace_figure(path, trace, dpi=150) -> None:
    """Energy and penalty share across the continuation stages."""
    stages = [r.stage for r in trace.stages]
    energy = [r.energy for r in trace.stages]
    share = [r.penalty / abs(r.energy) if r.energy else 0.0 for r in trace.stages]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8, 3))
    ax0.plot(stages, energy, "o-")
    ax0.set_xlabel("stage")
    ax0.set_ylabel("energy")
    ax1.semilogy(stages, np.maximum(share, 1e-16), "o-")
    ax1.set_xlabel("stage")
    ax1.set_ylabel("penalty / |energy|")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
