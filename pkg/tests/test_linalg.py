import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from comdf.exceptions import ConvergenceError, DesignError
from comdf.linalg import (
    as_matrix,
    dare_residual,
    kron,
    power_norm_bound,
    solve_dare,
    solve_dle,
    spectral_norm,
    spectral_radius,
    spectrum,
)

from conftest import SCALAR_P


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError):
        as_matrix([])


def test_kron_examples():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    L = np.array([[1, -1], [-1, 1]])
    expected = np.array([[1, 0, -1, 0], [0, 1, 0, -1], [-1, 0, 1, 0], [0, -1, 0, 1]])
    np.testing.assert_array_equal(kron(L, np.eye(2)), expected)
    np.testing.assert_array_equal(kron(np.ones((2, 1)), [[3.0]]), [[3.0], [3.0]])


def test_kron_mixed_product(rng):
    for _ in range(20):
        A, B = rng.uniform(-1, 1, (2, 3)), rng.uniform(-1, 1, (3, 2))
        C, D = rng.uniform(-1, 1, (3, 2)), rng.uniform(-1, 1, (2, 4))
        np.testing.assert_allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-12)
        E = rng.uniform(-1, 1, (2, 2))
        np.testing.assert_allclose(kron(kron(A, B), E), kron(A, kron(B, E)), atol=1e-12)


def test_spectral_radius_examples():
    assert spectral_radius(np.eye(3)) == pytest.approx(1.0, rel=1e-10)
    assert spectral_radius(np.diag([0.5, -0.9])) == pytest.approx(0.9, rel=1e-10)
    G2 = np.array([[1 / 2, 0, 1 / 2, 0], [0, 1 / 3, 0, 1 / 3], [1 / 3, 0, 1 / 3, 0], [0, 1 / 2, 0, 1 / 2]])
    assert spectral_radius(G2) == pytest.approx(5 / 6, rel=1e-10)
    # Complex dominant pair: rotation scaled by 0.7.
    rot = 0.7 * np.array([[0.0, -1.0], [1.0, 0.0]])
    assert spectral_radius(rot) == pytest.approx(0.7, rel=1e-10)
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))


def test_spectral_norm_examples():
    assert spectral_norm(np.eye(5)) == pytest.approx(1.0)
    assert spectral_norm(np.diag([2.0, -3.0])) == pytest.approx(3.0)
    nil = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert spectral_norm(nil) == pytest.approx(1.0)
    assert spectral_radius(nil) == pytest.approx(0.0, abs=1e-12)


def test_radius_bounded_by_norm(rng):
    for _ in range(500):
        n = rng.integers(1, 7)
        M = rng.uniform(-1, 1, (n, n))
        s = spectrum(M)
        assert s.radius <= s.norm2 * (1 + 1e-12)


def test_dare_zero_dynamics():
    P = solve_dare([[0.0]], [[2.0]], [[0.7]], [[3.0]])
    assert P[0, 0] == pytest.approx(0.7)


def test_dare_scalar_family():
    P = solve_dare([[0.9]], [[1.0], [1.0]], [[1.0]], np.eye(2))
    assert P[0, 0] == pytest.approx(SCALAR_P, abs=1e-10)
    assert 2 * P[0, 0] ** 2 - 1.81 * P[0, 0] - 1 == pytest.approx(0.0, abs=1e-10)


def test_dare_tracking_model_residual_and_scipy():
    from comdf.model import augment, constant_velocity, tracking_sensor_suite

    plant = constant_velocity(0.25)
    C, R = augment(tracking_sensor_suite())
    P = solve_dare(plant.A, C, plant.Q, R)
    assert dare_residual(plant.A, C, plant.Q, R, P) <= 1e-9 * (1 + spectral_norm(P))
    np.testing.assert_allclose(P, P.T, atol=1e-10)
    assert np.linalg.eigvalsh(P).min() >= -1e-9
    # Filtering DARE is the control DARE of the transposed pair.
    ref = scipy.linalg.solve_discrete_are(plant.A.T, C.T, plant.Q, R)
    np.testing.assert_allclose(P, ref, atol=1e-9)


def test_dare_nonconvergence_reports_residual():
    # Unstable and unobservable mode: Riccati iterates diverge.
    with pytest.raises(ConvergenceError) as info:
        solve_dare([[2.0, 0.0], [0.0, 0.5]], [[0.0, 1.0]], np.eye(2), [[1.0]], max_iter=50)
    assert info.value.iterations == 50
    assert info.value.residual > 0


def test_dare_dimension_mismatch():
    with pytest.raises(ValueError):
        solve_dare(np.eye(2), np.ones((1, 3)), np.eye(2), np.eye(1))


def test_dle_examples():
    Phi = np.array([[2.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(solve_dle(np.zeros((2, 2)), Phi), Phi)
    assert solve_dle([[0.5]], [[3.0]])[0, 0] == pytest.approx(4.0, abs=1e-12)
    F = np.array([[0.5, 0.1], [0.0, 0.4]])
    series = sum(np.linalg.matrix_power(F, k) @ np.linalg.matrix_power(F.T, k) for k in range(201))
    np.testing.assert_allclose(solve_dle(F, np.eye(2)), series, atol=1e-10)


def test_dle_rejects_unstable():
    with pytest.raises(DesignError):
        solve_dle([[1.0]], [[1.0]])


def test_dle_matches_scipy(rng):
    for _ in range(20):
        F = rng.uniform(-1, 1, (4, 4))
        F *= 0.95 / spectral_radius(F)
        W = rng.normal(size=(4, 4))
        Phi = W @ W.T
        X = solve_dle(F, Phi)
        assert spectral_norm(F @ X @ F.T + Phi - X) <= 1e-9 * (1 + spectral_norm(X))
        np.testing.assert_allclose(X, scipy.linalg.solve_discrete_lyapunov(F, Phi), rtol=1e-8, atol=1e-9)
        assert np.linalg.eigvalsh(X).min() >= -1e-9


def test_power_norm_bound_examples():
    assert power_norm_bound([[0.5]], 3) == pytest.approx(0.125)
    M = np.array([[0.5, 1.0], [0.0, 0.5]])
    assert power_norm_bound(M, 0) == pytest.approx(math.sqrt(2))
    assert power_norm_bound(M, 4) >= spectral_norm(np.linalg.matrix_power(M, 4))


@settings(max_examples=200, deadline=None)
@given(
    M=st.integers(1, 4).flatmap(lambda n: arrays(np.float64, (n, n), elements=st.floats(-1, 1))),
    k=st.integers(0, 30),
)
def test_power_norm_bound_dominates(M, k):
    rho = spectral_radius(M)
    if rho >= 1.0:
        M = M * (0.9 / rho)
    assert power_norm_bound(M, k) >= spectral_norm(np.linalg.matrix_power(M, k)) * (1 - 1e-9) - 1e-12
