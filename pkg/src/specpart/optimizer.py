"""Minimization of the penalized group energy with beta-continuation.

Two interchangeable per-stage schemes:

* projected gradient -- descend the Euclidean gradient, pull back onto the
  orthonormality manifold with a polar retraction, Armijo backtracking on the
  energy;
* fixed point -- cyclically freeze the competition potential generated by the
  other groups and re-solve a linear eigenproblem for each group (the default;
  it converges in a handful of sweeps per stage once warm-started).

A continuation run multiplies beta stage by stage, warm-starting each stage
from the last, until the competition term is a negligible share of the energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .energy import (GroupState, energy_eval, energy_grad, gram_matrices,
                     group_densities, load_state, penalty_eval)
from .eigensolve import dirichlet_eigenpairs
from .errors import ConvergenceError, DegenerateStateError, StageFailureError
from .fem import assemble_mass, assemble_stiffness
from .functional import FunctionalSpec, extremality_coefficients
from .mesh import Mesh

SCHEMES = ("fixed-point", "projected-gradient")
INIT_KINDS = ("bumps", "checkpoint")


@dataclass
class SolverConfig:
    """Knobs of the continuation solver; defaults suit the disk benchmarks.

    beta0 must be large enough that the initial competition dominates the
    spectral scale (beta0 * density >> lambda), otherwise the first stage
    relaxes back to the symmetric saddle where every group shares the domain
    eigenbasis and the continuation segregates into a poor local minimum.
    """

    scheme: str = "fixed-point"
    beta0: float = 400.0
    beta_multiplier: float = 4.0
    beta_stages: int = 10
    q: float = 1.0
    step0: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    tolerance: float = 1e-6          # stage stop: gradient norm / eigenvalue change
    max_iterations: int = 60         # per stage
    penalty_share_tol: float = 1e-3  # continuation stop: penalty / |energy|
    seed: int = 0
    init: str = "bumps"
    checkpoint_path: str = None
    projection_checkpoint: str = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.init not in INIT_KINDS:
            raise ValueError(f"unknown init {self.init!r}")
        if self.beta_multiplier <= 1:
            raise ValueError("beta multiplier must exceed 1")
        if not self.q > 0.5:
            raise ValueError(f"competition exponent q must exceed 1/2, got {self.q}")
        if self.tolerance <= 0 or self.penalty_share_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.beta_stages < 1 or self.max_iterations < 1:
            raise ValueError("stage and iteration counts must be positive")


@dataclass
class StageRecord:
    stage: int
    beta: float
    energy: float
    penalty: float
    grad_norm: float
    iterations: int
    stalled: bool = False


@dataclass
class RunTrace:
    stages: list = field(default_factory=list)

    def rows(self):
        for r in self.stages:
            yield (r.stage, r.beta, r.energy, r.penalty, r.grad_norm, r.iterations)


def retract(state: GroupState, B) -> GroupState:
    """Polar re-orthonormalization of every group: U <- U G^{-1/2}.

    Idempotent up to roundoff; raises DegenerateStateError on a (numerically)
    singular Gram matrix.
    """
    new_groups = []
    for i, U in enumerate(state.groups):
        G = U.T @ (B @ U)
        G = 0.5 * (G + G.T)
        w, S = np.linalg.eigh(G)
        if w[0] <= 1e-12 * max(w[-1], 1e-300):
            raise DegenerateStateError(
                f"group {i} is numerically linearly dependent "
                f"(Gram eigenvalues {w[0]:.3e} .. {w[-1]:.3e})")
        U = U @ ((S / np.sqrt(w)) @ S.T)
        # one polish pass tightens the Gram to identity at machine precision
        G = U.T @ (B @ U)
        G = 0.5 * (G + G.T)
        if np.abs(G - np.eye(G.shape[0])).max() > 1e-13:
            w, S = np.linalg.eigh(G)
            U = U @ ((S / np.sqrt(w)) @ S.T)
        new_groups.append(U)
    return replace(state, groups=new_groups)


def _orient(U: np.ndarray) -> np.ndarray:
    for j in range(U.shape[1]):
        col = U[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())
        if big.size and col[big[0]] < 0:
            U[:, j] = -col
    return U


def normalize_diagonal(state: GroupState, K, B) -> GroupState:
    """Rotate each group so its Gram matrix is diagonal with nondecreasing diagonal.

    The rotation is orthogonal, so B-orthonormality and the energy are
    preserved; columns get a deterministic sign.
    """
    new_groups = []
    for U, G in zip(state.groups, gram_matrices(state, K, B)):
        _, S = np.linalg.eigh(G)
        new_groups.append(_orient(U @ S))
    return replace(state, groups=new_groups)


def stationarity_residual(state: GroupState, spec, K, B, mesh) -> float:
    """Norm of the constrained first-order residual G - B U sym(U^T G).

    Vanishes exactly at stationary points of the energy on the orthonormality
    manifold.
    """
    grads = energy_grad(state, spec, K, B, mesh)
    total = 0.0
    for T in _constrained_residuals(state, grads, B, mesh):
        total += float((T * T).sum())
    return np.sqrt(total)


def _constrained_residuals(state, grads, B, mesh):
    """Per-group KKT residuals G - B U sym(U^T G), restricted to interior rows.

    Boundary values are pinned to zero, so only interior components count as
    (and may move along) descent directions.
    """
    out = []
    for U, g in zip(state.groups, grads):
        S = U.T @ g
        T = g - (B @ U) @ (0.5 * (S + S.T))
        T[mesh.boundary] = 0.0
        out.append(T)
    return out


def gradient_stage(state: GroupState, spec: FunctionalSpec, config: SolverConfig,
                   K, B, mesh: Mesh):
    """Projected-gradient descent at fixed beta; energy is nonincreasing.

    Steps follow the constrained residual preconditioned by the inverse
    lumped mass (the discrete L2-metric gradient), pulled back onto the
    manifold by the polar retraction with Armijo backtracking.
    """
    from .fem import lumped_mass

    x = retract(state, B)
    E = energy_eval(x, spec, K, B)
    w_inv = (1.0 / lumped_mass(B))[:, None]
    tau = config.step0
    gnorm = np.inf
    stalled = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        grads = energy_grad(x, spec, K, B, mesh)
        T = _constrained_residuals(x, grads, B, mesh)
        gnorm = np.sqrt(sum(float((Ti * Ti).sum()) for Ti in T))
        if gnorm <= config.tolerance:
            break
        D = [w_inv * Ti for Ti in T]
        slope = sum(float((Ti * Di).sum()) for Ti, Di in zip(T, D))
        tau_try = min(max(tau * 2.0, 1e-14), config.step0)
        accepted = False
        while tau_try >= 1e-14:
            try:
                cand = retract(replace(x, groups=[U - tau_try * Di
                                                  for U, Di in zip(x.groups, D)]), B)
                Ec = energy_eval(cand, spec, K, B)
            except DegenerateStateError:
                tau_try *= config.backtrack
                continue
            if Ec <= E - config.armijo * tau_try * slope:
                accepted = True
                break
            tau_try *= config.backtrack
        if not accepted:
            stalled = True
            break
        x, E, tau = cand, Ec, tau_try
    record = StageRecord(stage=-1, beta=x.beta, energy=E,
                         penalty=penalty_eval(x, B), grad_norm=gnorm,
                         iterations=it, stalled=stalled)
    return x, record


# cross-group stiffness ratios are clamped into [1/S, S] around the geometric
# mean; steep functionals (large p) otherwise swing the effective potential by
# tens of orders of magnitude and the iteration oscillates
_SCALE_TRUST = 3.0


def _coefficient_scales(state, spec, K, B, previous=None):
    """Per-group potential scales: mean extremality coefficients, clamped to a
    trust band around their geometric mean and log-averaged with the previous
    stage's scales (slow feedback keeps the sweep iteration from cycling)."""
    diag = [np.diag(G) for G in gram_matrices(state, K, B)]
    coeffs = extremality_coefficients(spec, diag)
    means = np.array([float(np.mean(c)) for c in coeffs])
    center = float(np.exp(np.mean(np.log(means))))
    scales = np.clip(means, center / _SCALE_TRUST, center * _SCALE_TRUST)
    if previous is not None:
        scales = np.sqrt(scales * previous)
    return scales


def fixed_point_stage(state: GroupState, spec: FunctionalSpec, config: SolverConfig,
                      K, B, mesh: Mesh, scales=None):
    """Cyclic potential-freezing eigenproblem sweeps at fixed beta (needs q = 1).

    For each group in turn: freeze the density generated by the other groups,
    scale it by beta over the group's extremality-coefficient scale, and
    replace the group with the lowest eigenvectors of the shifted operator.
    The coefficient scales are held fixed for the whole stage so the sweeps
    are a plain density-competition iteration; they refresh between stages
    alongside beta.  Stops when the Gram diagonals change by less than the
    stage tolerance.

    Returns (state, record, scales) with the scales used, so a continuation
    can thread them through as slow variables.
    """
    if state.q != 1.0:
        raise ValueError("the fixed-point scheme requires competition exponent q = 1")
    x = retract(state, B)
    m = x.m
    sizes = x.group_sizes
    if scales is None:
        scales = _coefficient_scales(x, spec, K, B)
    prev = None
    sweeps = 0
    for sweep in range(1, config.max_iterations + 1):
        sweeps = sweep
        potential_seen = False
        for i in range(m):
            rho = group_densities(x)
            V = rho.sum(axis=0) - rho[i]
            pot = None
            if x.beta > 0 and m > 1 and V.max() > 0:
                pot = (x.beta / scales[i]) * V
                potential_seen = True
            try:
                rep = dirichlet_eigenpairs(mesh, K, B, sizes[i], potential=pot)
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"eigensolve failed for group {i}: {exc}",
                    residuals=exc.residuals) from exc
            x.groups[i] = rep.vectors
        diag = [np.diag(G) for G in gram_matrices(x, K, B)]
        if not potential_seen:
            prev = diag
            break
        if prev is not None:
            change = max(
                float(np.max(np.abs(d - p) / np.maximum(np.abs(p), 1e-300)))
                for d, p in zip(diag, prev))
            if change <= config.tolerance:
                prev = diag
                break
        prev = diag
    record = StageRecord(stage=-1, beta=x.beta,
                         energy=energy_eval(x, spec, K, B),
                         penalty=penalty_eval(x, B),
                         grad_norm=stationarity_residual(x, spec, K, B, mesh),
                         iterations=sweeps)
    return x, record, scales


def _sample_centers(rng, mesh: Mesh, count):
    """Random first center, then farthest-point spreading over a candidate pool.

    Spread-out centers give balanced Voronoi cells, which keeps the
    continuation away from lopsided local minima.
    """
    def draw(n):
        if mesh.domain == "disk":
            r = 0.3 + 0.55 * np.sqrt(rng.random(n))
            t = 2.0 * np.pi * rng.random(n)
            return np.column_stack([r * np.cos(t), r * np.sin(t)])
        w, h = mesh.extent
        return np.column_stack([w * (0.15 + 0.7 * rng.random(n)),
                                h * (0.15 + 0.7 * rng.random(n))])

    centers = [draw(1)[0]]
    pool = draw(256)
    for _ in range(1, count):
        d2 = np.min([((pool - c) ** 2).sum(axis=1) for c in centers], axis=0)
        centers.append(pool[int(np.argmax(d2))])
    return np.array(centers)


def initial_state(mesh: Mesh, sizes, config: SolverConfig, B,
                  reference=None) -> GroupState:
    """Seeded nonnegative bump functions on a Voronoi split of the domain.

    Each group gets its own cell of a random m-center Voronoi partition of
    the vertices; fields are Gaussian bumps with jittered centers restricted
    to the cell, then the group is polar-orthonormalized.  Segregated starts
    keep the iteration away from the symmetric saddle where all groups share
    one eigenbasis.
    """
    m = len(sizes)
    rng = np.random.default_rng(config.seed)
    scale = 1.0 if mesh.domain == "disk" else max(mesh.extent)
    sigma = 0.5 * scale / np.sqrt(m)

    # smooth decay to zero at the domain boundary; chopping the bumps at the
    # boundary vertices alone would add O(1/h) kink energy and make the
    # initial coefficient scales resolution-dependent
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    if mesh.domain == "disk":
        bd = np.clip((1.0 - np.hypot(x, y)) / 0.15, 0.0, 1.0) ** 2
    else:
        w, h = mesh.extent
        margin = 0.15 * min(w, h)
        bd = (np.clip(x / margin, 0, 1) * np.clip((w - x) / margin, 0, 1)
              * np.clip(y / margin, 0, 1) * np.clip((h - y) / margin, 0, 1)) ** 2

    for _ in range(8):
        centers = _sample_centers(rng, mesh, m)
        dist = np.sqrt(((mesh.vertices[:, None, :]
                         - centers[None, :, :]) ** 2).sum(axis=2))
        groups = []
        for i, k in enumerate(sizes):
            if m > 1:
                other = np.min(np.delete(dist, i, axis=1), axis=1)
                # likewise taper to zero at the Voronoi cell boundary
                margin = (other - dist[:, i]) / (0.3 * sigma)
                taper = np.clip(margin, 0.0, 1.0) ** 2 * bd
            else:
                taper = bd.copy()
            taper[mesh.boundary] = 0.0
            block = np.zeros((mesh.n_vertices, k))
            for j in range(k):
                c = centers[i] + 0.25 * sigma * rng.standard_normal(2)
                r2 = ((mesh.vertices - c) ** 2).sum(axis=1)
                block[:, j] = np.exp(-r2 / (2.0 * sigma ** 2)) * taper
            groups.append(block)
        state = GroupState(groups=groups, beta=config.beta0, q=config.q,
                           reference=reference)
        try:
            return retract(state, B)
        except DegenerateStateError:
            continue
    raise DegenerateStateError(
        "could not build a non-degenerate initial state; try another seed")


def continuation_run(spec: FunctionalSpec, config: SolverConfig, mesh: Mesh,
                     checkpoint_hook=None):
    """Full beta schedule: warm-started stages with beta multiplied each time.

    Returns the final state (rotated so Gram matrices are diagonal) and the
    per-stage trace.  Terminates early once the competition term falls below
    penalty_share_tol * |energy|.  Stage failures abort the run with the
    partial trace attached.
    """
    K = assemble_stiffness(mesh)
    B = assemble_mass(mesh)
    sizes = spec.group_sizes

    reference = None
    if config.projection_checkpoint:
        ref_state = load_state(config.projection_checkpoint, mesh)
        if ref_state.group_sizes != sizes:
            raise ValueError("projection checkpoint group sizes do not match")
        reference = retract(ref_state, B).groups

    if config.init == "checkpoint":
        if not config.checkpoint_path:
            raise ValueError("init=checkpoint requires checkpoint_path")
        state = load_state(config.checkpoint_path, mesh)
        state = replace(state, q=config.q, reference=reference)
        state = retract(state, B)
    else:
        state = initial_state(mesh, sizes, config, B, reference=reference)

    fixed_point = config.scheme == "fixed-point"
    trace = RunTrace()
    beta = config.beta0
    scales = None
    for s in range(config.beta_stages):
        state = replace(state, beta=beta)
        try:
            if fixed_point:
                entry = _coefficient_scales(retract(state, B), spec, K, B,
                                            previous=scales)
                state, record, scales = fixed_point_stage(
                    state, spec, config, K, B, mesh, scales=entry)
            else:
                state, record = gradient_stage(state, spec, config, K, B, mesh)
        except Exception as exc:
            raise StageFailureError(f"stage {s} (beta={beta:g}) failed: {exc}",
                                    trace=trace, stage=s) from exc
        record.stage = s
        trace.stages.append(record)
        if checkpoint_hook is not None:
            checkpoint_hook(s, state, record)
        if record.penalty <= config.penalty_share_tol * abs(record.energy):
            break
        beta *= config.beta_multiplier
    state = normalize_diagonal(state, K, B)
    return state, trace
