import numpy as np
import pytest

from specpart.analysis import (extract_supports, extremality_residual,
                               gap_verdicts, interface_edges,
                               mask_area_mismatch, multiplicity_report,
                               subdomain_eigenvalues)
from specpart.energy import GroupState
from specpart.fem import assemble_mass
from specpart.mesh import build_disk_mesh, build_rectangle_mesh, build_square_mesh
from specpart.optimizer import retract
from specpart.reference import half_disk_eigenvalues, half_disk_state


def test_extract_supports_disjoint_state(disk8):
    x = disk8.vertices[:, 0]
    left = np.where(x < -1e-9, x * x, 0.0)
    right = np.where(x > 1e-9, x * x, 0.0)
    st = GroupState([left[:, None], right[:, None]], beta=0.0)
    masks = extract_supports(st)
    assert np.array_equal(masks[0], left > 0)
    assert np.array_equal(masks[1], right > 0)


def test_extract_supports_zero_state(disk8):
    z = np.zeros((disk8.n_vertices, 1))
    st = GroupState([z, z.copy()], beta=0.0)
    masks = extract_supports(st)
    assert masks.sum() == 0


def test_extract_supports_disjoint_exact(disk8, disk8_ops, rng):
    _, B = disk8_ops
    groups = []
    for k in (2, 1):
        U = rng.standard_normal((disk8.n_vertices, k))
        U[disk8.boundary] = 0.0
        groups.append(U)
    st = retract(GroupState(groups, beta=1.0), B)
    masks = extract_supports(st)
    assert np.all(masks.sum(axis=0) <= 1)  # pairwise disjoint


def test_interface_edges_checkerboard():
    # vertex 2-coloring by parity at n=2: all 8 bichromatic interior edges
    # are listed (a triangle is an odd cycle, so no 2-coloring makes every
    # interior edge bichromatic; the monochromatic diagonals are the rest)
    mesh = build_square_mesh(2)
    ij = np.round(mesh.vertices * 2).astype(int)
    color = (ij.sum(axis=1)) % 2
    masks = np.stack([color == 0, color == 1])
    samples = interface_edges(masks, mesh)
    edges = {s.edge for s in samples}
    expected = set()
    from specpart.analysis import _edge_triangles
    for (a, b), tris in _edge_triangles(mesh).items():
        if mesh.boundary[a] and mesh.boundary[b]:
            continue
        if color[a] != color[b]:
            expected.add((a, b))
    assert expected <= edges
    for s in samples:
        assert not (mesh.boundary[s.edge[0]] and mesh.boundary[s.edge[1]])


def test_interface_edges_single_group(disk8):
    masks = np.ones((1, disk8.n_vertices), dtype=bool)
    assert interface_edges(masks, disk8) == []


def test_interface_edges_half_disk_midpoints(disk16, disk16_ops):
    _, B = disk16_ops
    st = retract(half_disk_state(disk16, k=1, angle=0.0), B)
    masks = extract_supports(st)
    samples = interface_edges(masks, disk16)
    assert samples
    h = disk16.max_edge_length()
    for s in samples:
        assert abs(s.midpoint[1]) <= 2 * h  # near the horizontal diameter


def test_subdomain_eigenvalues_half_disk():
    mesh = build_disk_mesh(32)
    y = mesh.vertices[:, 1]
    masks = np.stack([y > 1e-12, y < -1e-12])
    vals = subdomain_eigenvalues(masks, mesh, (1, 1))
    exact = half_disk_eigenvalues(1)[0]
    for lam in vals:
        assert abs(lam[0] - exact) / exact < 0.02


def test_subdomain_eigenvalues_full_mask_matches_domain(disk8, disk8_ops):
    from specpart.eigensolve import dirichlet_eigenpairs

    K, B = disk8_ops
    masks = np.ones((1, disk8.n_vertices), dtype=bool)
    vals = subdomain_eigenvalues(masks, disk8, (2,))
    rep = dirichlet_eigenpairs(disk8, K, B, 3)
    assert np.allclose(vals[0], rep.values, rtol=1e-10)


def test_subdomain_eigenvalues_small_mask_diagnostic(disk8):
    masks = np.zeros((1, disk8.n_vertices), dtype=bool)
    masks[0, :3] = True
    with pytest.raises(ValueError, match="interior vertices"):
        subdomain_eigenvalues(masks, disk8, (5,))


def test_gap_verdict_definition():
    verdicts = gap_verdicts([np.array([1.0, 2.0, 2.0 + 1e-9])], (2,))
    assert not verdicts[0].ok
    verdicts = gap_verdicts([np.array([1.0, 2.0, 2.5])], (2,))
    assert verdicts[0].ok


def test_multiplicity_report_examples():
    clusters = multiplicity_report([np.array([5.0, 5.0000001, 9.0])],
                                   cluster_tol=1e-5)
    assert clusters == [[[0, 1], [2]]]
    clusters = multiplicity_report([np.array([1.0, 2.0, 3.0])])
    assert clusters == [[[0], [1], [2]]]


def test_extremality_thin_rectangle_profiles():
    # first eigenfunctions of two adjacent intervals, extruded in y
    mesh = build_rectangle_mesh(1.0, 0.25, 64, 16)
    x = mesh.vertices[:, 0]
    u1 = np.where(x <= 0.5, np.sin(2 * np.pi * x), 0.0)
    u2 = np.where(x >= 0.5, np.sin(2 * np.pi * (x - 0.5)), 0.0)
    st = GroupState([u1[:, None], u2[:, None]], beta=0.0)
    masks = extract_supports(st)
    samples = interface_edges(masks, mesh)
    res = extremality_residual(st, masks, samples, [np.ones(1), np.ones(1)], mesh)
    scored = [r.residual for r in res if not r.degenerate]
    assert scored
    assert np.median(scored) <= 0.05


def test_extremality_half_disk_analytic(disk16, disk16_ops):
    _, B = disk16_ops
    st = retract(half_disk_state(disk16, k=2, angle=0.4), B)
    masks = extract_supports(st)
    samples = interface_edges(masks, disk16)
    res = extremality_residual(st, masks, samples, [np.ones(2), np.ones(2)],
                               disk16)
    scored = [r.residual for r in res if not r.degenerate]
    assert np.median(scored) <= 0.10


def test_extremality_block_rotation_invariance(disk16, disk16_ops, rng):
    # rotating within an equal-coefficient cluster leaves the weighted sum
    from specpart.eigensolve import dirichlet_eigenpairs
    from specpart.fem import element_gradients

    K, B = disk16_ops
    rep = dirichlet_eigenpairs(disk16, K, B, 3)
    pair = rep.vectors[:, 1:3]  # the degenerate dipole pair
    theta = rng.random() * 2 * np.pi
    O = np.array([[np.cos(theta), -np.sin(theta)],
                  [np.sin(theta), np.cos(theta)]])
    def weighted(U):
        S = np.zeros(disk16.n_triangles)
        for j in range(U.shape[1]):
            g = element_gradients(disk16, U[:, j])
            S += (g * g).sum(axis=1)
        return S
    S0 = weighted(pair)
    S1 = weighted(pair @ O)
    assert np.abs(S1 - S0).max() <= 1e-8 * np.abs(S0).max()


def test_mask_area_mismatch_permutation(disk8):
    x = disk8.vertices[:, 0]
    masks = np.stack([x < 0, x > 0])
    swapped = masks[::-1]
    assert mask_area_mismatch(masks, swapped, disk8) == 0.0
    area = mask_area_mismatch(masks, np.stack([x < 0.2, x > 0.2]), disk8)
    assert area > 0.0


def test_masks_disjointness_invariant(disk16, disk16_ops, rng):
    _, B = disk16_ops
    groups = []
    for k in (2, 2):
        U = rng.standard_normal((disk16.n_vertices, k))
        U[disk16.boundary] = 0.0
        groups.append(U)
    st = retract(GroupState(groups, beta=1.0), B)
    masks = extract_supports(st)
    assert int(masks.sum(axis=0).max()) <= 1
