"""Smallest eigenpairs of the generalized symmetric problem K x = lambda B x.

Primary path is shift-invert Lanczos (ARPACK via scipy) with a sparse
factorization at sigma=0, which is fast and robust for the lowest cluster of
a Dirichlet operator.  Small systems go through a dense solve, and LOBPCG
with a diagonal preconditioner is kept as a fallback.  Every solve finishes
with a Rayleigh-Ritz pass in the computed subspace, so returned blocks are
B-orthonormal to machine precision with deterministic column orientation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError
from .fem import expand_interior, interior_vertices, lumped_mass
from .mesh import Mesh

DEFAULT_TOL = 1e-8
MAX_ITER = 500
# fixed ARPACK/LOBPCG starting data: keeps repeated solves bit-reproducible
_SEED = 20180129


@dataclass
class EigenReport:
    """Ordered eigenpairs of one solve.

    values     -- (k,) nondecreasing eigenvalues
    vectors    -- (n, k) B-orthonormal eigenvector columns
    residuals  -- (k,) relative residuals ||A x - lambda B x|| / ||A x||
    iterations -- solver attempts consumed (1 = primary path succeeded)
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int


def _orient_columns(X: np.ndarray) -> np.ndarray:
    """Flip signs so the first significant component of each column is positive."""
    X = X.copy()
    for j in range(X.shape[1]):
        col = X[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())
        if big.size and col[big[0]] < 0:
            X[:, j] = -col
    return X


def _rayleigh_ritz(A, B, X, k):
    """Project onto span(X) and rediagonalize; returns k B-orthonormal pairs."""
    H = X.T @ (A @ X)
    G = X.T @ (B @ X)
    H = 0.5 * (H + H.T)
    G = 0.5 * (G + G.T)
    vals, C = scipy.linalg.eigh(H, G)
    X = X @ C[:, :k]
    return vals[:k], _orient_columns(X)


def smallest_eigenpairs(K, B, k, potential=None, tol=DEFAULT_TOL,
                        maxiter=MAX_ITER, potential_weights=None) -> EigenReport:
    """k algebraically smallest eigenpairs of (K + V) x = lambda B x.

    The optional nonnegative `potential` is a per-node field applied through
    vertex (lumped-mass) quadrature, i.e. V = diag(weights * potential) with
    weights defaulting to the row sums of B.  Callers solving a restricted
    system pass the unrestricted weights via `potential_weights` so the
    quadrature matches the full-mesh one.  K must be positive semidefinite on
    the given space and B positive definite.
    """
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got k={k}")
    if K.shape != (n, n) or B.shape != (n, n):
        raise ValueError("K and B must be square with matching shape")

    A = sp.csr_matrix(K)
    if potential is not None:
        potential = np.asarray(potential, dtype=float)
        if potential.shape != (n,):
            raise ValueError("potential length does not match matrix dimension")
        if potential.min() < 0:
            raise ValueError("potential must be nonnegative")
        weights = lumped_mass(B) if potential_weights is None else potential_weights
        A = (A + sp.diags(weights * potential)).tocsr()

    attempts = 1
    if n < max(2 * k + 10, 80):
        vals, X = scipy.linalg.eigh(A.toarray(), sp.csr_matrix(B).toarray())
        X = X[:, :k]
    else:
        rng = np.random.default_rng(_SEED)
        v0 = rng.standard_normal(n)
        try:
            _, X = spla.eigsh(A, k=k, M=sp.csr_matrix(B), sigma=0.0,
                              which="LM", v0=v0, maxiter=maxiter)
        except Exception:
            attempts += 1
            X0 = rng.standard_normal((n, k))
            d = A.diagonal()
            M = sp.diags(1.0 / np.maximum(d, 1e-30))
            X, _ = _lobpcg(A, B, X0, M, tol, maxiter)
    vals, X = _rayleigh_ritz(A, sp.csr_matrix(B), X if X.ndim == 2 else X[:, None], k)

    AX = A @ X
    BX = B @ X
    num = np.linalg.norm(AX - BX * vals[None, :], axis=0)
    den = np.maximum(np.linalg.norm(AX, axis=0), 1e-300)
    residuals = num / den
    if residuals.max() > max(tol, 1e-12):
        raise ConvergenceError(
            f"eigensolve did not reach tolerance {tol:.1e}; "
            f"residuals={np.array2string(residuals, precision=3)}",
            residuals=residuals)
    return EigenReport(values=vals, vectors=X, residuals=residuals,
                       iterations=attempts)


def _lobpcg(A, B, X0, M, tol, maxiter):
    vals, X = spla.lobpcg(A, X0, B=B, M=M, tol=max(tol * 1e-2, 1e-12),
                          maxiter=max(maxiter, 200), largest=False)
    return X, vals


def rayleigh_quotient(x, K, B) -> float:
    """x^T K x / x^T B x."""
    x = np.asarray(x)
    bnorm = float(x @ (B @ x))
    if bnorm <= 0.0:
        raise ValueError("field has zero B-norm")
    return float(x @ (K @ x)) / bnorm


def eigenvalue_clusters(values, rtol=1e-6):
    """Group nondecreasing eigenvalues into clusters at a relative gap tolerance."""
    values = np.asarray(values, dtype=float)
    clusters = []
    current = [0]
    for i in range(1, len(values)):
        scale = max(abs(values[i]), abs(values[i - 1]), 1e-300)
        if (values[i] - values[i - 1]) <= rtol * scale:
            current.append(i)
        else:
            clusters.append(current)
            current = [i]
    if current:
        clusters.append(current)
    return clusters


def dirichlet_eigenpairs(mesh: Mesh, K, B, k, potential=None,
                         tol=DEFAULT_TOL) -> EigenReport:
    """Solve on the interior (Dirichlet) subspace and scatter back to full vectors.

    K, B are the full assembled operators; `potential` (optional) is a full
    per-vertex field.
    """
    interior = interior_vertices(mesh)
    Kr = sp.csr_matrix(K)[interior][:, interior]
    Br = sp.csr_matrix(B)[interior][:, interior]
    pr = None
    weights = None
    if potential is not None:
        pr = np.asarray(potential)[interior]
        weights = lumped_mass(B)[interior]
    rep = smallest_eigenpairs(Kr, Br, k, potential=pr, tol=tol,
                              potential_weights=weights)
    return EigenReport(values=rep.values,
                       vectors=expand_interior(mesh, rep.vectors),
                       residuals=rep.residuals,
                       iterations=rep.iterations)
