"""Qualitative regression anchors for the steeper benchmark functionals.

The stored masks are reduced-resolution (rings=16) twins of the figure-2 and
figure-3 presets; a rerun must reproduce the partition geometry up to a small
area tolerance.  These anchor the partition shapes across versions without
making quantitative claims about their values.
"""
from pathlib import Path

import numpy as np

from specpart.analysis import extract_supports, mask_area_mismatch
from specpart.functional import FunctionalSpec, InnerSpec
from specpart.mesh import build_disk_mesh
from specpart.optimizer import SolverConfig, continuation_run

DATA = Path(__file__).parent / "data" / "anchor_rings16_masks.npz"

FIGURE2 = FunctionalSpec("powersum",
                         (InnerSpec("product", 2), InnerSpec("pnorm", 2, p=2.0)),
                         outer_powers=(1, 2))
FIGURE3 = FunctionalSpec("powersum",
                         (InnerSpec("pnorm", 2, p=20.0), InnerSpec("pnorm", 1, p=20.0)),
                         outer_powers=(20.0, 20.0))


def _rerun(spec, seed, beta0):
    mesh = build_disk_mesh(16)
    cfg = SolverConfig(seed=seed, beta0=beta0, beta_stages=10,
                       max_iterations=60, penalty_share_tol=1e-4)
    state, _ = continuation_run(spec, cfg, mesh)
    return extract_supports(state), mesh


def test_figure2_partition_anchor():
    golden = np.load(DATA)["figure2"]
    masks, mesh = _rerun(FIGURE2, seed=3, beta0=2e4)
    assert mask_area_mismatch(masks, golden, mesh) <= 0.02 * np.pi


def test_figure3_partition_anchor():
    golden = np.load(DATA)["figure3"]
    masks, mesh = _rerun(FIGURE3, seed=1, beta0=1e28)
    assert mask_area_mismatch(masks, golden, mesh) <= 0.02 * np.pi
