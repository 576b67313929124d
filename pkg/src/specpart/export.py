"""File writers for run artifacts: legacy ASCII VTK, CSV tables, PGM rasters.

VTK output is a version 3.0 unstructured grid (POINTS / CELLS with cell type
5 / CELL_TYPES) with optional per-vertex scalar fields appended as
POINT_DATA.  CSV tables are RFC-4180 (CRLF line endings).  The partition
raster is an ASCII P2 portable graymap for quick viewing.
"""
from __future__ import annotations

import csv

import numpy as np
from scipy.spatial import cKDTree

from .mesh import Mesh

_FLOAT_FMT = "{:.12g}"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return _FLOAT_FMT.format(float(x))
    return str(x)


def write_vtk(path, mesh: Mesh, point_data=None, title="specpart output") -> None:
    """Legacy ASCII VTK unstructured grid, with optional scalar POINT_DATA."""
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines.extend(["5"] * mesh.n_triangles)
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (mesh.n_vertices,):
                raise ValueError(f"field {name!r} length does not match vertex count")
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in values)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_csv(path, header, rows) -> None:
    """RFC-4180 CSV: CRLF line endings, header row first."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_eigenvalue_csv(path, report) -> None:
    """Eigenvalue table of one solve: columns (index, value, residual)."""
    rows = [(i, report.values[i], report.residuals[i])
            for i in range(len(report.values))]
    write_csv(path, ["index", "value", "residual"], rows)


def write_trace_csv(path, trace) -> None:
    write_csv(path, ["stage", "beta", "energy", "penalty", "grad_norm", "iterations"],
              trace.rows())


def write_report_csvs(eigen_path, residual_path, report) -> None:
    """Partition report tables: per-group eigenvalues and interface residuals."""
    rows = []
    for i, (lam, gap, mism, clusters) in enumerate(
            zip(report.subdomain_eigenvalues, report.gaps,
                report.eigenvalue_mismatch, report.clusters)):
        cluster_id = np.empty(len(lam), dtype=int)
        for cid, cluster in enumerate(clusters):
            for j in cluster:
                cluster_id[j] = cid
        for j in range(len(lam)):
            rows.append((i, j, lam[j], mism[j], cluster_id[j],
                         gap.lam_top, gap.lam_next, int(gap.ok)))
    write_csv(eigen_path,
              ["group", "index", "eigenvalue", "mismatch", "cluster",
               "gap_top", "gap_next", "gap_ok"], rows)

    rows = [(r.midpoint[0], r.midpoint[1], r.pair[0], r.pair[1],
             r.side_values[0], r.side_values[1], r.residual, int(r.degenerate))
            for r in report.residuals]
    write_csv(residual_path,
              ["x", "y", "group_a", "group_b", "side_a", "side_b",
               "residual", "degenerate"], rows)


def rasterize_partition(masks, mesh: Mesh, width=256) -> np.ndarray:
    """Nearest-vertex raster of the partition labels over the bounding box.

    Pixel values: 0 for background/unassigned, i+1 for group i.
    """
    masks = np.asarray(masks, dtype=bool)
    label = np.zeros(mesh.n_vertices, dtype=int)
    for i in range(masks.shape[0]):
        label[masks[i]] = i + 1
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    span = hi - lo
    height = max(2, int(round(width * span[1] / span[0])))
    xs = lo[0] + (np.arange(width) + 0.5) / width * span[0]
    ys = lo[1] + (np.arange(height) + 0.5) / height * span[1]
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tree = cKDTree(mesh.vertices)
    dist, idx = tree.query(pts)
    values = label[idx]
    h = mesh.max_edge_length()
    values[dist > 1.5 * h] = 0  # outside the triangulated region
    return values.reshape(height, width)[::-1]  # raster rows top to bottom


def write_pgm(path, grid) -> None:
    """ASCII P2 portable graymap."""
    grid = np.asarray(grid, dtype=int)
    if grid.ndim != 2 or grid.min() < 0:
        raise ValueError("expected a 2-d array of nonnegative ints")
    maxval = max(int(grid.max()), 1)
    lines = ["P2", f"{grid.shape[1]} {grid.shape[0]}", str(maxval)]
    for row in grid:
        lines.append(" ".join(str(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
