"""Post-processing of a converged partition state.

Extracts per-group supports, samples the interfaces between adjacent
supports, recomputes each subdomain's eigenvalues with zero conditions
outside its mask, checks the spectral gap, and evaluates the relative
mismatch of the coefficient-weighted squared-gradient sums across every
interface sample (the free-boundary balance the converged state should
satisfy).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .eigensolve import eigenvalue_clusters, smallest_eigenpairs
from .energy import GroupState, gram_matrices, group_densities
from .fem import (assemble_mass, assemble_stiffness, element_gradients,
                  lumped_mass)
from .functional import FunctionalSpec, extremality_coefficients
from .mesh import Mesh

SUPPORT_THRESHOLD = 1e-3      # relative to each group's max amplitude
GAP_RTOL = 1e-6               # spectral-gap verdict threshold
DEGENERATE_RTOL = 1e-6        # flag samples with both one-sided values ~ 0
CLUSTER_RTOL = 1e-3           # eigenvalue multiplicity clustering


@dataclass
class InterfaceSample:
    edge: tuple            # (a, b) vertex indices
    midpoint: np.ndarray   # (2,)
    pair: tuple            # (p, q) group indices, p < q
    tris: tuple            # adjacent triangle indices (one or two)


@dataclass
class ResidualSample:
    midpoint: np.ndarray
    pair: tuple
    side_values: tuple     # coefficient-weighted |grad|^2 on each side
    residual: float        # |S_p - S_q| / max(S_p, S_q)
    degenerate: bool       # both sides tiny compared with the sample median


@dataclass
class GapVerdict:
    lam_top: float         # k_i-th eigenvalue
    lam_next: float        # (k_i+1)-th eigenvalue
    ok: bool


@dataclass
class PartitionReport:
    masks: np.ndarray                       # (m, nv) bool, pairwise disjoint
    samples: list
    subdomain_eigenvalues: list             # per group, length k_i
    gaps: list                              # per group GapVerdict
    eigenvalue_mismatch: list               # per group |gram diag - lambda| / lambda
    residuals: list                         # ResidualSample list
    coefficients: list                      # per group weight vectors
    clusters: list                          # per group eigenvalue multiplicity structure
    eigen_reports: list = None              # per group solve reports (k_i + 1 pairs)


def extract_supports(state: GroupState, threshold=SUPPORT_THRESHOLD) -> np.ndarray:
    """Assign each vertex to the group with the largest density there.

    A vertex stays unassigned when the winning density is below
    threshold^2 * (that group's maximum density), which cuts off the
    exponential tails of the penalized fields without eating the support.
    Masks are pairwise disjoint by construction.
    """
    rho = group_densities(state)
    winner = np.argmax(rho, axis=0)
    win_rho = rho[winner, np.arange(rho.shape[1])]
    cut = threshold ** 2 * rho.max(axis=1)
    assigned = win_rho > cut[winner]
    masks = np.zeros(rho.shape, dtype=bool)
    masks[winner[assigned], np.flatnonzero(assigned)] = True
    return masks


def _edge_triangles(mesh: Mesh):
    """Map sorted vertex pair -> list of adjacent triangle indices."""
    table: dict = {}
    tri = np.asarray(mesh.triangles)
    for t in range(len(tri)):
        a, b, c = tri[t]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            table.setdefault(key, []).append(t)
    return table


def _triangle_labels(masks, mesh: Mesh) -> np.ndarray:
    """Majority group of each triangle's assigned vertices; -1 when unclear."""
    m = masks.shape[0]
    vertex_label = np.full(mesh.n_vertices, -1)
    for i in range(m):
        vertex_label[masks[i]] = i
    labels = np.full(mesh.n_triangles, -1)
    tri_labels = vertex_label[mesh.triangles]
    for t in range(mesh.n_triangles):
        groups, counts = np.unique(tri_labels[t][tri_labels[t] >= 0],
                                   return_counts=True)
        if groups.size == 0:
            continue
        best = np.flatnonzero(counts == counts.max())
        if best.size == 1:
            labels[t] = groups[best[0]]
    return labels


def interface_edges(masks, mesh: Mesh) -> list:
    """Mesh edges separating two groups, with midpoints and adjacent triangles.

    An edge is an interface sample when its endpoints belong to two different
    groups, or when its two adjacent triangles have different majority groups;
    edges lying on the domain boundary are excluded.
    """
    masks = np.asarray(masks, dtype=bool)
    vertex_label = np.full(mesh.n_vertices, -1)
    for i in range(masks.shape[0]):
        vertex_label[masks[i]] = i
    tri_label = _triangle_labels(masks, mesh)
    samples = []
    for (a, b), tris in sorted(_edge_triangles(mesh).items()):
        if mesh.boundary[a] and mesh.boundary[b]:
            continue
        pair = None
        la, lb = vertex_label[a], vertex_label[b]
        if la >= 0 and lb >= 0 and la != lb:
            pair = (min(la, lb), max(la, lb))
        elif len(tris) == 2:
            t0, t1 = tri_label[tris[0]], tri_label[tris[1]]
            if t0 >= 0 and t1 >= 0 and t0 != t1:
                pair = (min(t0, t1), max(t0, t1))
        if pair is not None:
            mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            samples.append(InterfaceSample(edge=(a, b), midpoint=mid,
                                           pair=pair, tris=tuple(tris)))
    return samples


def subdomain_eigenreports(masks, mesh: Mesh, sizes, tol=1e-8):
    """Re-solve each group's lowest eigenpairs on its own support.

    The operators are restricted to the masked vertices (zero-Dirichlet
    outside the mask and on the domain boundary); each group gets k_i + 1
    pairs, so the last value feeds the spectral-gap check.
    """
    masks = np.asarray(masks, dtype=bool)
    if masks.shape[0] != len(sizes):
        raise ValueError("need one requested count per mask")
    K = assemble_stiffness(mesh)
    B = assemble_mass(mesh)
    reports = []
    for i, k in enumerate(sizes):
        dofs = np.flatnonzero(masks[i] & ~mesh.boundary)
        if dofs.size < k + 1:
            raise ValueError(
                f"mask {i} has only {dofs.size} interior vertices; "
                f"need at least {k + 1} to resolve {k} eigenvalues plus the gap")
        Kr = K[dofs][:, dofs]
        Br = B[dofs][:, dofs]
        reports.append(smallest_eigenpairs(Kr, Br, k + 1, tol=tol))
    return reports


def subdomain_eigenvalues(masks, mesh: Mesh, sizes, tol=1e-8):
    """Per-group eigenvalue arrays of length k_i + 1 (see subdomain_eigenreports)."""
    return [r.values for r in subdomain_eigenreports(masks, mesh, sizes, tol=tol)]


def gap_verdicts(values, sizes) -> list:
    out = []
    for lam, k in zip(values, sizes):
        top, nxt = lam[k - 1], lam[k]
        out.append(GapVerdict(lam_top=float(top), lam_next=float(nxt),
                              ok=bool(nxt - top > GAP_RTOL * top)))
    return out


def _singular_vertices(masks, mesh: Mesh) -> np.ndarray:
    """Vertices whose one-ring sees 3 or more groups (partition junction points)."""
    vertex_label = np.full(mesh.n_vertices, -1)
    for i in range(masks.shape[0]):
        vertex_label[masks[i]] = i
    star: list = [set() for _ in range(mesh.n_vertices)]
    for t in mesh.triangles:
        present = {vertex_label[v] for v in t if vertex_label[v] >= 0}
        for v in t:
            star[v].update(present)
    return np.array([len(s) >= 3 for s in star])


def _vertex_stars(mesh: Mesh):
    stars: list = [[] for _ in range(mesh.n_vertices)]
    for t, tri in enumerate(np.asarray(mesh.triangles)):
        for v in tri:
            stars[v].append(t)
    return stars


def extremality_residual(state: GroupState, masks, samples, coefficients,
                         mesh: Mesh, layers=2) -> list:
    """Relative mismatch of sum_j a_{p,j} |grad u_{p,j}|^2 across each interface.

    The one-sided limit on side p averages the elementwise value over a small
    patch grown from the sample: elements within `layers` neighbor hops that
    contain at least one vertex of group p and no vertex of another group.
    Elements cut by the interface carry contaminated averages and are never
    used; the patch is centered on the sample, so first-order variation along
    the interface cancels, and averaging suppresses the element-scale noise
    of discrete gradients along oblique interfaces.  The value stays an
    adjacent-element one (distance O(h), no extrapolation).  Samples touching
    a junction vertex (3+ groups in its star) are dropped; samples with both
    one-sided values far below the sample median are flagged as degenerate
    rather than scored.
    """
    masks = np.asarray(masks, dtype=bool)
    m = masks.shape[0]
    vertex_label = np.full(mesh.n_vertices, -1)
    for i in range(m):
        vertex_label[masks[i]] = i
    singular = _singular_vertices(masks, mesh)
    stars = _vertex_stars(mesh)
    tri = np.asarray(mesh.triangles)

    # per-group coefficient-weighted squared gradients per triangle
    weighted = []
    for i, U in enumerate(state.groups):
        S = np.zeros(mesh.n_triangles)
        for j in range(U.shape[1]):
            g = element_gradients(mesh, U[:, j])
            S += coefficients[i][j] * (g * g).sum(axis=1)
        weighted.append(S)

    def admissible(side, t):
        labels = vertex_label[tri[t]]
        return (labels == side).any() and not ((labels >= 0) & (labels != side)).any()

    def one_sided(side, seed):
        patch = {t for t in seed if admissible(side, t)}
        for _ in range(layers - 1):
            grown = set(patch)
            for t in patch:
                for v in tri[t]:
                    grown.update(t2 for t2 in stars[v] if admissible(side, t2))
            patch = grown
        if not patch:
            return None
        return float(np.mean([weighted[side][t] for t in sorted(patch)]))

    raw = []
    skipped = 0
    for s in samples:
        a, b = s.edge
        if singular[a] or singular[b]:
            continue
        p, q = s.pair
        candidates = sorted(set(stars[a]) | set(stars[b]))
        sp_val = one_sided(p, candidates)
        sq_val = one_sided(q, candidates)
        if sp_val is None or sq_val is None:
            skipped += 1
            continue
        raw.append((s, sp_val, sq_val))
    if skipped:
        warnings.warn(f"{skipped} interface samples had no adjacent element "
                      "on one side and were skipped")
    if not raw:
        return []
    median_peak = float(np.median([max(sp_val, sq_val) for _, sp_val, sq_val in raw]))
    out = []
    for s, sp_val, sq_val in raw:
        peak = max(sp_val, sq_val)
        degenerate = peak < DEGENERATE_RTOL * median_peak
        residual = abs(sp_val - sq_val) / max(peak, 1e-300)
        out.append(ResidualSample(midpoint=s.midpoint, pair=s.pair,
                                  side_values=(float(sp_val), float(sq_val)),
                                  residual=float(residual),
                                  degenerate=bool(degenerate)))
    return out


def multiplicity_report(values, cluster_tol=CLUSTER_RTOL) -> list:
    """Cluster per-group eigenvalue lists at a relative tolerance."""
    return [eigenvalue_clusters(lam, rtol=cluster_tol) for lam in values]


def build_report(state: GroupState, spec: FunctionalSpec, mesh: Mesh, K, B,
                 threshold=SUPPORT_THRESHOLD,
                 cluster_tol=CLUSTER_RTOL) -> PartitionReport:
    """Full post-processing pass over a converged, normalized state."""
    masks = extract_supports(state, threshold)
    samples = interface_edges(masks, mesh)
    sizes = state.group_sizes
    reports = subdomain_eigenreports(masks, mesh, sizes)
    sub = [r.values for r in reports]
    gaps = gap_verdicts(sub, sizes)
    grams = gram_matrices(state, K, B)
    mismatch = []
    for G, lam, k in zip(grams, sub, sizes):
        d = np.sort(np.diag(G))
        mismatch.append(np.abs(d - lam[:k]) / lam[:k])
    coeffs = extremality_coefficients(spec, [lam[:k] for lam, k in zip(sub, sizes)])
    residuals = extremality_residual(state, masks, samples, coeffs, mesh)
    clusters = multiplicity_report([lam[:k] for lam, k in zip(sub, sizes)],
                                   cluster_tol)
    return PartitionReport(masks=masks, samples=samples,
                           subdomain_eigenvalues=[lam[:k] for lam, k in zip(sub, sizes)],
                           gaps=gaps, eigenvalue_mismatch=mismatch,
                           residuals=residuals, coefficients=coeffs,
                           clusters=clusters, eigen_reports=reports)


def mask_area_mismatch(masks_a, masks_b, mesh: Mesh) -> float:
    """Area where two partitions label vertices differently, minimized over
    group relabelings (vertex areas from the lumped mass matrix)."""
    import itertools

    masks_a = np.asarray(masks_a, dtype=bool)
    masks_b = np.asarray(masks_b, dtype=bool)
    w = lumped_mass(assemble_mass(mesh))
    m = masks_a.shape[0]
    la = np.full(mesh.n_vertices, -1)
    lb = np.full(mesh.n_vertices, -1)
    for i in range(m):
        la[masks_a[i]] = i
        lb[masks_b[i]] = i
    best = np.inf
    for perm in itertools.permutations(range(m)):
        relabeled = np.where(lb >= 0, np.asarray(perm)[lb], -1)
        best = min(best, float(w[la != relabeled].sum()))
    return best
