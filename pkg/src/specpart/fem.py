"""P1 finite elements on triangle meshes.

Assembles the stiffness and mass operators with exact per-element formulas,
eliminates Dirichlet (boundary) degrees of freedom symmetrically, and
evaluates elementwise gradients of piecewise-linear fields.  Matrices are
scipy CSR; element contributions are emitted symmetrically so the assembled
operators are exactly symmetric.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, signed_areas


def _element_geometry(mesh: Mesh):
    """Per-triangle areas and P1 basis gradients, shape (nt, 3, 2)."""
    tri = mesh.triangles
    p = mesh.vertices[tri]  # (nt, 3, 2)
    areas = signed_areas(mesh.vertices, tri)
    if areas.min() <= 0:
        t = int(np.argmin(areas))
        raise ValueError(f"cannot assemble: triangle {t} has non-positive area {areas[t]:.3e}")
    # gradient of barycentric coordinate i is perp(opposite edge) / (2 A)
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    grads = np.empty((len(tri), 3, 2))
    for i, e in enumerate((e0, e1, e2)):
        grads[:, i, 0] = -e[:, 1]
        grads[:, i, 1] = e[:, 0]
    grads /= (2.0 * areas)[:, None, None]
    return areas, grads


def _assemble(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    """Scatter per-element 3x3 blocks into a global CSR matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)),
                      shape=(mesh.n_vertices, mesh.n_vertices))
    return A.tocsr()


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """Stiffness matrix of the Laplacian: K[a,b] = integral grad(phi_a).grad(phi_b)."""
    areas, grads = _element_geometry(mesh)
    local = np.einsum("tia,tja->tij", grads, grads) * areas[:, None, None]
    return _assemble(mesh, local)


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    """Consistent mass matrix: B[a,b] = integral phi_a.phi_b (exact P1 formula)."""
    areas = mesh.triangle_areas()
    if areas.min() <= 0:
        t = int(np.argmin(areas))
        raise ValueError(f"cannot assemble: triangle {t} has non-positive area {areas[t]:.3e}")
    base = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    local = areas[:, None, None] * base[None, :, :]
    return _assemble(mesh, local)


def lumped_mass(B: sp.spmatrix) -> np.ndarray:
    """Row sums of the mass matrix; the vertex quadrature weights."""
    return np.asarray(B.sum(axis=1)).ravel()


def interior_vertices(mesh: Mesh) -> np.ndarray:
    return np.flatnonzero(~mesh.boundary)


def apply_dirichlet(A: sp.spmatrix, mesh: Mesh) -> sp.csr_matrix:
    """Symmetric elimination of boundary rows/columns.

    Returns the submatrix over interior vertices (the homogeneous Dirichlet
    system).  Passing an already-reduced matrix returns it unchanged.
    """
    interior = interior_vertices(mesh)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.shape[0] == interior.size:
        return A.tocsr()
    if A.shape[0] != mesh.n_vertices:
        raise ValueError(
            f"dimension mismatch: matrix is {A.shape[0]}, mesh has "
            f"{mesh.n_vertices} vertices ({interior.size} interior)")
    return A.tocsr()[interior][:, interior]


def expand_interior(mesh: Mesh, x: np.ndarray) -> np.ndarray:
    """Scatter interior-node values into a full vector (or column block), zero on the boundary."""
    interior = interior_vertices(mesh)
    shape = (mesh.n_vertices,) + x.shape[1:]
    full = np.zeros(shape)
    full[interior] = x
    return full


def restrict_interior(mesh: Mesh, x: np.ndarray) -> np.ndarray:
    return x[interior_vertices(mesh)]


def element_gradients(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Constant gradient of the P1 interpolant on every triangle, shape (nt, 2)."""
    values = np.asarray(values)
    if values.shape[0] != mesh.n_vertices:
        raise ValueError("field length does not match vertex count")
    _, grads = _element_geometry(mesh)
    return np.einsum("tia,ti->ta", grads, values[mesh.triangles])


def element_gradient(mesh: Mesh, values: np.ndarray, t: int) -> np.ndarray:
    """Gradient of the P1 interpolant on triangle t."""
    if not 0 <= t < mesh.n_triangles:
        raise ValueError(f"triangle index {t} out of range")
    values = np.asarray(values)
    tri = mesh.triangles[t]
    p = mesh.vertices[tri]
    area = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
                  - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1]))
    g = np.zeros(2)
    for i in range(3):
        e = p[(i + 2) % 3] - p[(i + 1) % 3]
        g += values[tri[i]] * np.array([-e[1], e[0]]) / (2.0 * area)
    return g


def inner_products(a: np.ndarray, b: np.ndarray, K: sp.spmatrix, B: sp.spmatrix):
    """H1-seminorm and L2 pairings (a^T K b, a^T B b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.shape[0] != K.shape[0] or K.shape != B.shape:
        raise ValueError("dimension mismatch between fields and matrices")
    return float(a @ (K @ b)), float(a @ (B @ b))
