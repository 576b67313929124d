"""Penalized group energy on the discrete orthonormality manifold.

The state holds m groups of nodal coefficient vectors that are B-orthonormal
within each group.  The energy couples the cost functional of the per-group
Gram matrices (H1 pairings, plus an optional projection penalty against
reference fields) with a beta-weighted competition integral that forces the
group supports apart; the competition term uses vertex (lumped-mass)
quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateStateError
from .fem import lumped_mass
from .functional import (FunctionalSpec, extremality_coefficients,
                         outer_eval_and_grad, phi_eval, phi_matrix_grad)
from .mesh import Mesh

CHECKPOINT_VERSION = 1


@dataclass
class GroupState:
    """m groups of fields with segregation parameters.

    groups    -- list of (n, k_i) arrays; columns are nodal fields, zero on
                 boundary nodes, B-orthonormal within each group
    beta      -- competition strength, >= 0
    q         -- competition exponent, > 1/2
    reference -- optional per-group (n, r_i) B-orthonormal reference blocks;
                 when present, Gram matrices include the penalty that pins the
                 group to the span of its reference (projection mode)
    """

    groups: list
    beta: float
    q: float = 1.0
    reference: list = None

    def __post_init__(self):
        self.groups = [np.asarray(g, dtype=float) for g in self.groups]
        if not self.groups:
            raise ValueError("need at least one group")
        n = self.groups[0].shape[0]
        for g in self.groups:
            if g.ndim != 2 or g.shape[0] != n:
                raise ValueError("groups must be (n, k_i) blocks over one mesh")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not self.q > 0.5:
            raise ValueError(f"competition exponent must exceed 1/2, got {self.q}")
        if self.reference is not None:
            self.reference = [np.asarray(r, dtype=float) for r in self.reference]
            if len(self.reference) != len(self.groups):
                raise ValueError("need one reference block per group")
            for r in self.reference:
                if r.shape[0] != n:
                    raise ValueError("reference block length mismatch")

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def group_sizes(self) -> tuple:
        return tuple(g.shape[1] for g in self.groups)

    @property
    def n_nodes(self) -> int:
        return self.groups[0].shape[0]

    def copy(self) -> "GroupState":
        return replace(self, groups=[g.copy() for g in self.groups],
                       reference=None if self.reference is None
                       else [r.copy() for r in self.reference])


@dataclass
class MultiplierReport:
    """Lagrange data of the stationarity system.

    coefficients -- per-group positive vectors a[i] (one weight per field)
    multipliers  -- per-group (k_i, k_i) matrices from testing the equation
                    of each field against the others in its group
    """

    coefficients: list
    multipliers: list


def group_densities(state: GroupState) -> np.ndarray:
    """Per-group pointwise densities rho_i(v) = sum_j u_{i,j}(v)^2, shape (m, n)."""
    return np.stack([(g * g).sum(axis=1) for g in state.groups])


def projection_contribution(state: GroupState, B) -> float:
    """Total B-norm squared of the components orthogonal to the reference spans."""
    if state.reference is None:
        return 0.0
    total = 0.0
    for U, R in zip(state.groups, state.reference):
        BU = B @ U
        C = R.T @ BU
        total += float((U * BU).sum() - (C * C).sum())
    return total


def gram_matrices(state: GroupState, K, B) -> list:
    """Per-group Gram matrices: H1 pairings plus the projection-penalty term.

    Entry (a, b) of group i is u_a^T K u_b, plus (P u_a)^T B (P u_b) in
    projection mode, where P removes the B-orthogonal projection onto the
    group's reference span.
    """
    if K.shape[0] != state.n_nodes:
        raise ValueError("matrix dimension does not match state")
    grams = []
    for i, U in enumerate(state.groups):
        G = U.T @ (K @ U)
        if state.reference is not None:
            BU = B @ U
            C = state.reference[i].T @ BU
            G = G + U.T @ BU - C.T @ C
        grams.append(0.5 * (G + G.T))
    return grams


def penalty_eval(state: GroupState, B) -> float:
    """Competition term (beta/q) * sum_{i<j} integral rho_i^q rho_j^q (lumped)."""
    if state.beta == 0.0 or state.m < 2:
        return 0.0
    w = lumped_mass(B)
    rho_q = group_densities(state) ** state.q
    total = 0.0
    for i in range(state.m):
        for j in range(i + 1, state.m):
            total += float(w @ (rho_q[i] * rho_q[j]))
    return state.beta / state.q * total


def energy_eval(state: GroupState, spec: FunctionalSpec, K, B) -> float:
    """F(phi_1(G_1), ..., phi_m(G_m)) + competition penalty."""
    if spec.group_sizes != state.group_sizes:
        raise ValueError("functional group sizes do not match the state")
    scores = []
    for i, G in enumerate(gram_matrices(state, K, B)):
        w = np.linalg.eigvalsh(G)
        if w[0] <= 0:
            raise DegenerateStateError(
                f"group {i} has a non-positive-definite Gram matrix "
                f"(smallest eigenvalue {w[0]:.3e}); re-orthonormalize")
        scores.append(phi_eval(spec.groups[i], w))
    value, _ = outer_eval_and_grad(spec, scores)
    return value + penalty_eval(state, B)


def _bounded_power(rho, q):
    """rho^{q-1} with 0 mapped to 0; bounded in products with u for q > 1/2."""
    if q == 1.0:
        return np.ones_like(rho)
    out = np.zeros_like(rho)
    pos = rho > 0
    out[pos] = rho[pos] ** (q - 1.0)
    return out


def _penalty_gradients(state: GroupState, B):
    """Per-group penalty gradients 2*beta*w*rho_i^{q-1}*V_i * u_i (None if off)."""
    if state.beta == 0.0 or state.m < 2:
        return None
    w = lumped_mass(B)
    rho = group_densities(state)
    rho_q = rho ** state.q
    grads = []
    for i in range(state.m):
        V = rho_q.sum(axis=0) - rho_q[i]
        grads.append((2.0 * state.beta * w * _bounded_power(rho[i], state.q) * V)[:, None]
                     * state.groups[i])
    return grads


def energy_grad(state: GroupState, spec: FunctionalSpec, K, B, mesh: Mesh) -> list:
    """Euclidean gradient of energy_eval with respect to each nodal block.

    Rows of boundary vertices are zeroed: fields are constrained to vanish
    there, so only interior components are optimization variables.
    """
    if spec.group_sizes != state.group_sizes:
        raise ValueError("functional group sizes do not match the state")
    grams = gram_matrices(state, K, B)
    scores = []
    for i, G in enumerate(grams):
        w = np.linalg.eigvalsh(G)
        if w[0] <= 0:
            raise DegenerateStateError(
                f"group {i} has a non-positive-definite Gram matrix "
                f"(smallest eigenvalue {w[0]:.3e}); re-orthonormalize")
        scores.append(phi_eval(spec.groups[i], w))
    _, gF = outer_eval_and_grad(spec, scores)

    pen = _penalty_gradients(state, B)
    out = []
    for i, U in enumerate(state.groups):
        Gp = phi_matrix_grad(spec.groups[i], grams[i])
        UG = U @ Gp
        H = K @ UG
        if state.reference is not None:
            R = state.reference[i]
            BUG = B @ UG
            H = H + BUG - B @ (R @ (R.T @ BUG))
        g = 2.0 * gF[i] * H
        if pen is not None:
            g = g + pen[i]
        g[mesh.boundary] = 0.0
        out.append(g)
    return out


def multipliers(state: GroupState, spec: FunctionalSpec, K, B) -> MultiplierReport:
    """Lagrange multipliers from testing each field's equation against its group.

    mu_i[a, l] = a_{i,a} * G_i[a, l] + beta * integral u_{i,a} u_{i,l}
                 rho_i^{q-1} V_i, with V_i the competition potential generated
    by the other groups.  At a stationary normalized state the Gram matrices
    are diagonal and mu_i collapses to its diagonal plus the cross terms.
    """
    grams = gram_matrices(state, K, B)
    coeffs = extremality_coefficients(spec, [np.diag(G) for G in grams])
    w = lumped_mass(B)
    rho = group_densities(state)
    rho_q = rho ** state.q
    mus = []
    for i, U in enumerate(state.groups):
        mu = coeffs[i][:, None] * grams[i]
        if state.beta > 0 and state.m > 1:
            V = rho_q.sum(axis=0) - rho_q[i]
            coeff = _bounded_power(rho[i], state.q) * V
            mu = mu + state.beta * (U.T @ ((w * coeff)[:, None] * U))
        mus.append(mu)
    return MultiplierReport(coefficients=coeffs, multipliers=mus)


def save_state(path, state: GroupState, mesh: Mesh) -> None:
    """Write a checkpoint tied to the mesh; round-trips bit-exactly."""
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "mesh_hash": np.array(mesh.content_hash()),
        "beta": np.array(state.beta),
        "q": np.array(state.q),
        "group_sizes": np.array(state.group_sizes),
        "has_reference": np.array(state.reference is not None),
    }
    for i, g in enumerate(state.groups):
        payload[f"group_{i}"] = g
    if state.reference is not None:
        for i, r in enumerate(state.reference):
            payload[f"reference_{i}"] = r
    np.savez(path, **payload)


def load_state(path, mesh: Mesh) -> GroupState:
    """Read a checkpoint written by save_state, verifying mesh identity."""
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        if str(data["mesh_hash"]) != mesh.content_hash():
            raise ValueError("checkpoint was written for a different mesh")
        sizes = data["group_sizes"]
        groups = [data[f"group_{i}"] for i in range(len(sizes))]
        reference = None
        if bool(data["has_reference"]):
            reference = [data[f"reference_{i}"] for i in range(len(sizes))]
        return GroupState(groups=groups, beta=float(data["beta"]),
                          q=float(data["q"]), reference=reference)
