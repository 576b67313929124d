"""Triangulations of the canonical planar domains.

Structured meshes for the unit square, axis-aligned rectangles and the unit
disk, plus uniform midpoint refinement.  Builders return immutable, validated
meshes with boundary vertices flagged; the disk uses a polar layout whose
angular resolution grows with radius, so no external mesh generator is needed.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

# Vertices closer than this to the analytic boundary are flagged as boundary.
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation of a planar domain.

    vertices   -- (nv, 2) float64 coordinates
    triangles  -- (nt, 3) int vertex indices, positively oriented
    boundary   -- (nv,) bool, True exactly for vertices on the domain boundary
    domain     -- one of "square", "rectangle", "disk"
    extent     -- (width, height) for square/rectangle meshes; ignored for disk
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    domain: str
    extent: tuple = (1.0, 1.0)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    def max_edge_length(self) -> float:
        p = self.vertices[self.triangles]
        e = np.concatenate([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
        return float(np.sqrt((e * e).sum(axis=1)).max())

    def content_hash(self) -> str:
        """SHA-256 over the geometric content; used to tie checkpoints to a mesh."""
        h = hashlib.sha256()
        h.update(self.domain.encode())
        h.update(np.asarray(self.extent, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(self.vertices).tobytes())
        h.update(np.ascontiguousarray(self.triangles).tobytes())
        h.update(np.ascontiguousarray(self.boundary).tobytes())
        return h.hexdigest()


def signed_areas(vertices, triangles) -> np.ndarray:
    p0 = vertices[triangles[:, 0]]
    p1 = vertices[triangles[:, 1]]
    p2 = vertices[triangles[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


def _finalize(vertices, triangles, boundary, domain, extent) -> Mesh:
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    boundary = np.ascontiguousarray(boundary, dtype=bool)
    for a in (vertices, triangles, boundary):
        a.setflags(write=False)
    return Mesh(vertices, triangles, boundary, domain, extent)


def _on_boundary(domain, extent, pts) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    if domain in ("square", "rectangle"):
        w, h = extent
        return (np.abs(x) < BOUNDARY_TOL) | (np.abs(x - w) < BOUNDARY_TOL) \
            | (np.abs(y) < BOUNDARY_TOL) | (np.abs(y - h) < BOUNDARY_TOL)
    if domain == "disk":
        return np.hypot(x, y) > 1.0 - BOUNDARY_TOL
    raise ValueError(f"unknown domain {domain!r}")


def build_rectangle_mesh(width, height, nx, ny) -> Mesh:
    """Structured mesh of [0,width]x[0,height] with nx*ny cells split into 2 triangles."""
    if nx < 2 or ny < 2:
        raise ValueError(f"need at least 2 subdivisions per side, got ({nx}, {ny})")
    if width <= 0 or height <= 0:
        raise ValueError("rectangle extent must be positive")
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    domain = "square" if (width == 1.0 and height == 1.0) else "rectangle"
    boundary = _on_boundary(domain, (width, height), vertices)
    return _finalize(vertices, np.array(tris), boundary, domain, (width, height))


def build_square_mesh(n) -> Mesh:
    """Structured mesh of the unit square with 2*n^2 triangles."""
    if n < 2:
        raise ValueError(f"need at least 2 subdivisions per side, got {n}")
    return build_rectangle_mesh(1.0, 1.0, n, n)


def _annulus_triangles(inner_ids, outer_ids):
    """Triangulate the annulus between two concentric vertex rings.

    Both rings hold vertices at equally spaced angles starting at 0; the walk
    advances whichever ring has the smaller next angle, producing m+n
    positively oriented triangles.
    """
    m, n = len(inner_ids), len(outer_ids)
    tris = []
    ai = ao = 0
    while ai < m or ao < n:
        inner_next = (ai + 1) * (2.0 * np.pi) / m
        outer_next = (ao + 1) * (2.0 * np.pi) / n
        if ao < n and (ai >= m or outer_next <= inner_next):
            tris.append((inner_ids[ai % m], outer_ids[ao % n], outer_ids[(ao + 1) % n]))
            ao += 1
        else:
            tris.append((inner_ids[ai % m], outer_ids[ao % n], inner_ids[(ai + 1) % m]))
            ai += 1
    return tris


def build_disk_mesh(rings) -> Mesh:
    """Polar-structured mesh of the unit disk.

    Ring j (1 <= j <= rings) sits at radius j/rings and carries 6*j vertices,
    so the angular resolution grows with radius and the triangles stay close
    to equilateral.  Total: 1 + 3*rings*(rings+1) vertices, 6*rings^2 triangles.
    """
    if rings < 2:
        raise ValueError(f"need at least 2 rings, got {rings}")
    verts = [(0.0, 0.0)]
    ring_start = [0]
    for j in range(1, rings + 1):
        nj = 6 * j
        r = j / rings
        ang = np.arange(nj) * (2.0 * np.pi) / nj
        ring_start.append(len(verts))
        verts.extend(zip(r * np.cos(ang), r * np.sin(ang)))
    vertices = np.array(verts)

    tris = []
    first = [ring_start[1] + i for i in range(6)]
    for i in range(6):
        tris.append((0, first[i], first[(i + 1) % 6]))
    for j in range(2, rings + 1):
        inner = [ring_start[j - 1] + i for i in range(6 * (j - 1))]
        outer = [ring_start[j] + i for i in range(6 * j)]
        tris.extend(_annulus_triangles(inner, outer))

    # outermost ring is the boundary; snap it to the unit circle exactly
    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[ring_start[rings]:] = True
    r = np.hypot(vertices[boundary, 0], vertices[boundary, 1])
    vertices[boundary] /= r[:, None]
    return _finalize(vertices, np.array(tris), boundary, "disk", (2.0, 2.0))


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into 4 via edge midpoints.

    On the disk, midpoints of boundary edges are projected back to the unit
    circle so the polygonal boundary converges to the true one.
    """
    vertices = [tuple(p) for p in mesh.vertices]
    boundary = list(mesh.boundary)
    mid_index: dict[tuple[int, int], int] = {}

    def midpoint(a, b):
        key = (a, b) if a < b else (b, a)
        idx = mid_index.get(key)
        if idx is not None:
            return idx
        p = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        on_bd = False
        if mesh.boundary[a] and mesh.boundary[b]:
            if mesh.domain == "disk":
                p = p / np.hypot(p[0], p[1])
                on_bd = True
            else:
                on_bd = bool(_on_boundary(mesh.domain, mesh.extent, p[None, :])[0])
        idx = len(vertices)
        vertices.append((p[0], p[1]))
        boundary.append(on_bd)
        mid_index[key] = idx
        return idx

    tris = []
    for v0, v1, v2 in mesh.triangles:
        m01 = midpoint(v0, v1)
        m12 = midpoint(v1, v2)
        m20 = midpoint(v2, v0)
        tris.extend([(v0, m01, m20), (v1, m12, m01), (v2, m20, m12), (m01, m12, m20)])
    return _finalize(np.array(vertices), np.array(tris), np.array(boundary),
                     mesh.domain, mesh.extent)


def _edge_counts(triangles):
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return counts


def validate_mesh(mesh: Mesh) -> None:
    """Raise ValueError on any structural violation."""
    nv = mesh.n_vertices
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= nv:
        raise ValueError("triangle vertex index out of range")
    areas = mesh.triangle_areas()
    if areas.min() <= 0:
        t = int(np.argmin(areas))
        raise ValueError(f"triangle {t} has non-positive area {areas[t]:.3e}")
    counts = _edge_counts(np.asarray(mesh.triangles))
    if counts.max() > 2:
        raise ValueError("non-conforming mesh: an edge is shared by more than 2 triangles")
    flagged = _on_boundary(mesh.domain, mesh.extent, mesh.vertices)
    if not np.array_equal(flagged, mesh.boundary):
        raise ValueError("boundary flags do not match the domain boundary")
