"""Analytic oracles for the canonical domains.

Closed-form Dirichlet eigenvalues of the unit square (separation of
variables) and of the unit disk / half-disk (Bessel zeros), plus reference
partition states built by interpolating the exact half-disk eigenfunctions
onto a mesh.  These are the independent values the solver is checked against.
"""
from __future__ import annotations

import numpy as np
from scipy.special import jn_zeros, jv

from .energy import GroupState
from .fem import assemble_mass, lumped_mass
from .mesh import Mesh


def square_eigenvalues(count) -> np.ndarray:
    """Smallest Dirichlet eigenvalues of the unit square: pi^2 (m^2 + n^2)."""
    top = int(np.ceil(np.sqrt(count))) + 2
    vals = sorted(np.pi ** 2 * (m * m + n * n)
                  for m in range(1, top + 1) for n in range(1, top + 1))
    return np.array(vals[:count])


def disk_eigenvalues(count) -> np.ndarray:
    """Smallest Dirichlet eigenvalues of the unit disk: squared Bessel zeros.

    j_{0,k}^2 are simple; j_{m,k}^2 for m >= 1 come with multiplicity two
    (cos and sin angular factors).
    """
    per_order = count
    vals = []
    for m in range(count + 1):
        for z in jn_zeros(m, per_order):
            vals.append((z * z, 1 if m == 0 else 2))
    vals.sort()
    out = []
    for v, mult in vals:
        out.extend([v] * mult)
        if len(out) >= count:
            break
    return np.array(out[:count])


def half_disk_eigenvalues(count) -> np.ndarray:
    """Smallest Dirichlet eigenvalues of the unit half-disk: j_{m,k}^2, m >= 1."""
    vals = []
    for m in range(1, count + 2):
        vals.extend(z * z for z in jn_zeros(m, count))
    return np.array(sorted(vals)[:count])


def half_disk_state(mesh: Mesh, k=2, angle=0.0, beta=0.0, q=1.0) -> GroupState:
    """Two-group state interpolating the exact half-disk eigenfunctions.

    Group 0 lives on the half-disk on the positive side of the diameter at
    `angle`, group 1 on the other; field j of each group is
    J_{j+1}(j_{j+1,1} r) sin((j+1) theta) measured from that diameter.  The
    fields vanish on the diameter and the circle, so the two supports are
    exactly disjoint at the vertices.  The caller should retract before
    evaluating energies.
    """
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    xi = np.cos(angle) * x + np.sin(angle) * y
    eta = -np.sin(angle) * x + np.cos(angle) * y
    r = np.hypot(xi, eta)
    theta = np.arctan2(eta, xi)
    groups = []
    for side in (1.0, -1.0):
        inside = (side * theta) > 0
        block = np.zeros((mesh.n_vertices, k))
        for j in range(k):
            m = j + 1
            root = jn_zeros(m, 1)[0]
            block[:, j] = np.where(inside & ~mesh.boundary,
                                   jv(m, root * r) * np.sin(m * side * theta), 0.0)
        groups.append(block)
    return GroupState(groups=groups, beta=beta, q=q)


def half_disk_fit(masks, mesh: Mesh, n_angles=720):
    """Best-fit half-disk pair for a two-group partition of the disk.

    Scans diameter orientations and both group matchings; returns
    (best_angle, mismatch_area) where the mismatch is the lumped-mass area of
    vertices labeled differently from the half-disk pair (unassigned vertices
    count as mismatched).
    """
    masks = np.asarray(masks, dtype=bool)
    if masks.shape[0] != 2:
        raise ValueError("half-disk fit needs exactly two groups")
    w = lumped_mass(assemble_mass(mesh))
    label = np.full(mesh.n_vertices, -1)
    label[masks[0]] = 0
    label[masks[1]] = 1
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    best = (0.0, np.inf)
    for a in np.linspace(0.0, np.pi, n_angles, endpoint=False):
        side = (-np.sin(a) * x + np.cos(a) * y) > 0
        for matching in (side, ~side):
            expected = np.where(matching, 0, 1)
            mismatch = float(w[label != expected].sum())
            if mismatch < best[1]:
                best = (float(a), mismatch)
    return best
