import numpy as np
import pytest

from specpart.functional import (FunctionalSpec, InnerSpec,
                                 extremality_coefficients, functional_value,
                                 outer_eval_and_grad, phi_eval, phi_grad,
                                 phi_matrix_eval, phi_matrix_grad)

PNORM2 = InnerSpec("pnorm", 2, p=2.0)
PROD2 = InnerSpec("product", 2)
SUM3 = InnerSpec("sum", 3)

ALL_SPECS = [
    InnerSpec("pnorm", 3, p=1.0),
    InnerSpec("pnorm", 3, p=2.0),
    InnerSpec("pnorm", 3, p=20.0),
    InnerSpec("product", 3),
    InnerSpec("sum", 3),
]


def random_spd(rng, k, scale=1.0):
    A = rng.standard_normal((k, k))
    return scale * (A @ A.T + k * np.eye(k))


def random_orthogonal(rng, k):
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    return Q * np.sign(np.diag(R))


def test_phi_eval_examples():
    assert phi_eval(PNORM2, [3.0, 4.0]) == pytest.approx(5.0, abs=1e-14)
    assert phi_eval(PROD2, [2.0, 3.0]) == pytest.approx(6.0, abs=1e-14)
    assert phi_eval(SUM3, [1.0, 1.0, 1.0]) == pytest.approx(3.0, abs=1e-14)


def test_phi_eval_rejects_nonpositive():
    with pytest.raises(ValueError):
        phi_eval(PNORM2, [1.0, 0.0])
    with pytest.raises(ValueError):
        phi_eval(PROD2, [-1.0, 2.0])


def test_phi_eval_permutation_bit_identical(rng):
    for spec in ALL_SPECS:
        v = 1.0 + rng.random(spec.size) * 10.0
        reference = phi_eval(spec, v)
        for _ in range(5):
            assert phi_eval(spec, rng.permutation(v)) == reference


def test_phi_strict_monotonicity(rng):
    # (H1): increasing any single argument strictly increases the value
    for _ in range(100):
        spec = ALL_SPECS[rng.integers(len(ALL_SPECS))]
        v = 0.5 + rng.random(spec.size) * 5.0
        j = rng.integers(spec.size)
        bumped = v.copy()
        bumped[j] += 0.1 + rng.random()
        assert phi_eval(spec, bumped) > phi_eval(spec, v)


def test_phi_coercivity_direction():
    # (H2): blowing up one argument blows up the value
    for spec in ALL_SPECS:
        v = np.full(spec.size, 2.0)
        big = v.copy()
        big[0] = 1e9
        assert phi_eval(spec, big) > 1e6 * phi_eval(spec, v)


def test_pnorm_large_p_stable():
    spec = InnerSpec("pnorm", 2, p=20.0)
    v = np.array([30.0, 60.0])
    val = phi_eval(spec, v)
    assert 60.0 < val < 60.0 * 2 ** (1 / 20.0) + 1e-9
    g = phi_grad(spec, v)
    assert np.all(np.isfinite(g)) and np.all(g > 0)


def test_phi_matrix_eval_examples():
    assert phi_matrix_eval(InnerSpec("pnorm", 2, p=1.0), np.eye(2)) == pytest.approx(2.0)
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert phi_matrix_eval(PROD2, M) == pytest.approx(3.0, rel=1e-12)
    # eigenvalues (1, 3): sqrt(1 + 9) = sqrt(trace(M^2))
    assert phi_matrix_eval(PNORM2, M) == pytest.approx(np.sqrt(10.0), rel=1e-12)
    assert np.trace(M @ M) == pytest.approx(10.0)


def test_phi_matrix_eval_matches_diagonal(rng):
    for spec in ALL_SPECS:
        v = 0.5 + rng.random(spec.size) * 4.0
        assert phi_matrix_eval(spec, np.diag(v)) == pytest.approx(
            phi_eval(spec, v), rel=1e-12)


def test_phi_matrix_eval_rejects_non_pd():
    M = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues -1, 3
    with pytest.raises(ValueError, match="smallest eigenvalue"):
        phi_matrix_eval(PNORM2, M)


def test_phi_matrix_grad_diagonal_has_zero_off_diagonal():
    for spec in (PNORM2, PROD2, InnerSpec("sum", 2)):
        G = phi_matrix_grad(spec, np.diag([1.0, 2.0]))
        assert abs(G[0, 1]) < 1e-10
        assert abs(G[1, 0]) < 1e-10


def test_phi_matrix_grad_product_at_diagonal():
    G = phi_matrix_grad(PROD2, np.diag([1.0, 2.0]))
    assert np.allclose(G, np.diag([2.0, 1.0]), atol=1e-12)


def test_phi_matrix_grad_finite_differences(rng):
    h = 1e-5
    for spec in ALL_SPECS:
        k = spec.size
        M = random_spd(rng, k)
        G = phi_matrix_grad(spec, M)
        for _ in range(10):
            H = rng.standard_normal((k, k))
            H = 0.5 * (H + H.T)
            fd = (phi_matrix_eval(spec, M + h * H)
                  - phi_matrix_eval(spec, M - h * H)) / (2 * h)
            assert abs(float((G * H).sum()) - fd) <= 1e-6 * max(abs(fd), 1e-8)


def test_phi_matrix_grad_bounded_near_crossing():
    # nearly repeated eigenvalues: the cluster-averaged gradient stays finite
    M = np.diag([2.0, 2.0 + 1e-9, 5.0])
    G = phi_matrix_grad(InnerSpec("pnorm", 3, p=2.0), M)
    assert np.all(np.isfinite(G))
    assert abs(G[0, 0] - G[1, 1]) < 1e-8


def test_orthogonal_invariance(rng):
    for _ in range(20):
        spec = ALL_SPECS[rng.integers(len(ALL_SPECS))]
        M = random_spd(rng, spec.size)
        O = random_orthogonal(rng, spec.size)
        v1 = phi_matrix_eval(spec, O @ M @ O.T)
        v0 = phi_matrix_eval(spec, M)
        assert abs(v1 - v0) <= 1e-10 * abs(v0)


def test_outer_eval_examples():
    spec = FunctionalSpec("sum", (InnerSpec("sum", 1), InnerSpec("sum", 1)))
    v, g = outer_eval_and_grad(spec, [5.0, 7.0])
    assert v == pytest.approx(12.0) and np.allclose(g, [1.0, 1.0])
    spec = FunctionalSpec("product", (InnerSpec("sum", 1), InnerSpec("sum", 1)))
    v, g = outer_eval_and_grad(spec, [2.0, 3.0])
    assert v == pytest.approx(6.0) and np.allclose(g, [3.0, 2.0])


def test_outer_gradient_finite_differences(rng):
    h = 1e-6
    specs = [
        FunctionalSpec("sum", (InnerSpec("sum", 1),) * 3),
        FunctionalSpec("product", (InnerSpec("sum", 1),) * 3),
        FunctionalSpec("powersum", (InnerSpec("sum", 1),) * 3,
                       outer_powers=(1.0, 2.0, 3.0)),
    ]
    for spec in specs:
        x = 1.0 + rng.random(3) * 5.0
        _, g = outer_eval_and_grad(spec, x)
        assert np.all(g > 0)  # (H1) at the outer level
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (outer_eval_and_grad(spec, x + e)[0]
                  - outer_eval_and_grad(spec, x - e)[0]) / (2 * h)
            assert abs(g[j] - fd) <= 1e-8 * max(abs(fd), 1.0)


def test_outer_rejects_nonpositive():
    spec = FunctionalSpec("sum", (InnerSpec("sum", 1), InnerSpec("sum", 1)))
    with pytest.raises(ValueError):
        outer_eval_and_grad(spec, [1.0, -2.0])


def test_extremality_coefficients_pnorm1_all_ones():
    spec = FunctionalSpec("sum", (InnerSpec("pnorm", 3, p=1.0),))
    coeffs = extremality_coefficients(spec, [np.array([1.5, 2.5, 9.0])])
    assert np.allclose(coeffs[0], 1.0, atol=1e-14)


def test_extremality_coefficients_pnorm2():
    spec = FunctionalSpec("sum", (PNORM2,))
    coeffs = extremality_coefficients(spec, [np.array([1.0, 2.0])])
    expected = np.array([1.0, 2.0]) / np.sqrt(5.0)
    assert np.allclose(coeffs[0], expected, rtol=1e-12)


def test_extremality_coefficients_product():
    spec = FunctionalSpec("sum", (PROD2,))
    coeffs = extremality_coefficients(spec, [np.array([2.0, 3.0])])
    assert np.allclose(coeffs[0], [3.0, 2.0], rtol=1e-12)


def test_extremality_coefficients_equal_for_equal_eigenvalues():
    spec = FunctionalSpec("sum", (InnerSpec("pnorm", 3, p=2.0),))
    coeffs = extremality_coefficients(spec, [np.array([2.0, 2.0 + 1e-9, 5.0])])
    assert coeffs[0][0] == coeffs[0][1]


def test_functional_value_composes():
    spec = FunctionalSpec("powersum", (PROD2, PNORM2), outer_powers=(1.0, 2.0))
    # lam1*lam2 + (lam1^2 + lam2^2)
    v = functional_value(spec, [np.array([2.0, 3.0]), np.array([1.0, 2.0])])
    assert v == pytest.approx(6.0 + 5.0, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        InnerSpec("pnorm", 2, p=0.0)
    with pytest.raises(ValueError):
        InnerSpec("median", 2)
    with pytest.raises(ValueError):
        FunctionalSpec("max", (PNORM2,))
    with pytest.raises(ValueError):
        FunctionalSpec("powersum", (PNORM2, PROD2), outer_powers=(1.0,))
