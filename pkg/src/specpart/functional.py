"""Cost functionals over eigenvalue tuples and their matrix extensions.

A partition cost is an outer combinator applied to per-group scores, where
each group score is a symmetric function phi of that group's eigenvalues
(p-norm, product or plain sum).  phi extends to symmetric positive-definite
matrices by acting on the spectrum; this module provides values, gradients,
and the eigenvalue-weighted coefficients of the interface extremality
condition.  All combinators are strictly increasing and coercive on the
positive orthant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INNER_KINDS = ("pnorm", "product", "sum")
OUTER_KINDS = ("sum", "product", "powersum")

# eigenvalues closer than this (relatively) are treated as one cluster when
# differentiating through a spectral decomposition
CLUSTER_RTOL = 1e-6


@dataclass(frozen=True)
class InnerSpec:
    """Symmetric score of one group's eigenvalues.

    kind "pnorm"   -> (sum_j v_j^p)^(1/p), p > 0
    kind "product" -> prod_j v_j
    kind "sum"     -> sum_j v_j
    """

    kind: str
    size: int
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in INNER_KINDS:
            raise ValueError(f"unknown inner functional {self.kind!r}")
        if self.size < 1:
            raise ValueError("group size must be >= 1")
        if self.kind == "pnorm" and not self.p > 0:
            raise ValueError(f"p-norm exponent must be positive, got {self.p}")


@dataclass(frozen=True)
class FunctionalSpec:
    """Outer combinator over group scores.

    outer "sum"      -> sum_i x_i
    outer "product"  -> prod_i x_i
    outer "powersum" -> sum_i x_i^{p_i} with per-group exponents outer_powers
    """

    outer: str
    groups: tuple
    outer_powers: tuple = None

    def __post_init__(self):
        if self.outer not in OUTER_KINDS:
            raise ValueError(f"unknown outer functional {self.outer!r}")
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.outer == "powersum":
            if self.outer_powers is None:
                object.__setattr__(self, "outer_powers", (1.0,) * len(self.groups))
            else:
                object.__setattr__(self, "outer_powers",
                                   tuple(float(p) for p in self.outer_powers))
            if len(self.outer_powers) != len(self.groups):
                raise ValueError("outer_powers length must match the number of groups")
            if any(p <= 0 for p in self.outer_powers):
                raise ValueError("outer powers must be positive")

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def group_sizes(self) -> tuple:
        return tuple(g.size for g in self.groups)


def _check_positive(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-d array of values")
    if v.min() <= 0:
        raise ValueError(f"inputs must be positive, got min {v.min()}")
    return v


def phi_eval(inner: InnerSpec, values) -> float:
    """phi applied to a tuple of positive values (sorted first, so the result
    is bit-identical under permutation of the inputs)."""
    v = np.sort(_check_positive(values))
    if inner.kind == "sum":
        return float(v.sum())
    if inner.kind == "product":
        return float(v.prod())
    # p-norm in scaled form: stable for large p
    top = v[-1]
    s = ((v / top) ** inner.p).sum()
    return float(top * s ** (1.0 / inner.p))


def phi_grad(inner: InnerSpec, values) -> np.ndarray:
    """Partial derivatives of phi at a tuple of positive values."""
    v = _check_positive(values)
    if inner.kind == "sum":
        return np.ones_like(v)
    if inner.kind == "product":
        return v.prod() / v
    top = v.max()
    s = ((v / top) ** inner.p).sum()
    return (v / top) ** (inner.p - 1.0) / s ** ((inner.p - 1.0) / inner.p)


def _spd_eigh(M) -> tuple:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    scale = np.abs(M).max()
    if scale > 0 and np.abs(M - M.T).max() > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    if w[0] <= 0:
        raise ValueError(f"matrix not positive definite (smallest eigenvalue {w[0]:.3e})")
    return w, Q


def phi_matrix_eval(inner: InnerSpec, M) -> float:
    """phi applied to the spectrum of a symmetric positive-definite matrix."""
    w, _ = _spd_eigh(M)
    return phi_eval(inner, w)


def _cluster_average(values, derivs, rtol=CLUSTER_RTOL) -> np.ndarray:
    out = np.array(derivs, dtype=float)
    start = 0
    for i in range(1, len(values) + 1):
        scale = max(abs(values[i - 1]), abs(values[min(i, len(values) - 1)]), 1e-300)
        boundary = i == len(values) or (values[i] - values[i - 1]) > rtol * scale
        if boundary:
            out[start:i] = out[start:i].mean()
            start = i
    return out


def phi_matrix_grad(inner: InnerSpec, M) -> np.ndarray:
    """Gradient matrix G with G:H = d/dh phi(M + h H) for symmetric H.

    In the eigenbasis of M the gradient is diagonal with the partial
    derivatives of phi at the spectrum; derivatives are averaged inside
    eigenvalue clusters so G stays well-defined and bounded through
    crossings (phi is symmetric, so the averaged value is the correct
    derivative of the cluster trace).
    """
    w, Q = _spd_eigh(M)
    d = _cluster_average(w, phi_grad(inner, w))
    G = (Q * d) @ Q.T
    return 0.5 * (G + G.T)


def outer_eval_and_grad(spec: FunctionalSpec, scores):
    """Value and gradient of the outer combinator at positive group scores."""
    x = _check_positive(scores)
    if x.size != spec.m:
        raise ValueError(f"expected {spec.m} scores, got {x.size}")
    if spec.outer == "sum":
        return float(x.sum()), np.ones_like(x)
    if spec.outer == "product":
        total = x.prod()
        return float(total), total / x
    powers = np.asarray(spec.outer_powers)
    return float((x ** powers).sum()), powers * x ** (powers - 1.0)


def functional_value(spec: FunctionalSpec, eigenvalues) -> float:
    """Cost of a partition given per-group eigenvalue tuples."""
    scores = [phi_eval(g, lam) for g, lam in zip(spec.groups, eigenvalues)]
    value, _ = outer_eval_and_grad(spec, scores)
    return value


def extremality_coefficients(spec: FunctionalSpec, eigenvalues):
    """Coefficients a[i][j] weighting |grad u_{i,j}|^2 in the interface balance.

    a[i][j] = dF/dx_i (scores) * dphi_i/dlambda_j (eigenvalues of group i).
    Coefficients are equal for (numerically) equal eigenvalues within a group.
    """
    if len(eigenvalues) != spec.m:
        raise ValueError(f"expected eigenvalues for {spec.m} groups")
    lams = [_check_positive(lam) for lam in eigenvalues]
    for g, lam in zip(spec.groups, lams):
        if lam.size != g.size:
            raise ValueError("eigenvalue count does not match group size")
    scores = [phi_eval(g, lam) for g, lam in zip(spec.groups, lams)]
    _, gF = outer_eval_and_grad(spec, scores)
    coeffs = []
    for i, (g, lam) in enumerate(zip(spec.groups, lams)):
        order = np.argsort(lam)
        d = phi_grad(g, lam)
        d_sorted = _cluster_average(lam[order], d[order])
        d = np.empty_like(d_sorted)
        d[order] = d_sorted
        coeffs.append(gF[i] * d)
    return coeffs
