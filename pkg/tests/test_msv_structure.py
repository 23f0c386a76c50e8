import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import central_difference
from unbiased_cso.msv import (
    covariance,
    eigenvector_matrix,
    omega_to_psi,
    pair_indices,
    psi_to_omega,
    rotation_matrix,
    softmax_jacobian,
    softmax_weights,
)

finite = st.floats(-30, 30, allow_nan=False)


def test_uniform_logits():
    np.testing.assert_allclose(softmax_weights(np.zeros(7)), np.full(7, 1 / 7), rtol=1e-15)


@settings(max_examples=100, deadline=None)
@given(xi=arrays(float, st.integers(1, 12), elements=finite), shift=st.floats(-500, 500))
def test_softmax_simplex_and_shift_invariance(xi, shift):
    w = softmax_weights(xi)
    assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-12
    np.testing.assert_allclose(softmax_weights(xi + shift), w, rtol=1e-9, atol=1e-300)


def test_softmax_survives_huge_logits():
    w = softmax_weights(np.array([1000.0, 999.0, -1000.0]))
    assert np.all(np.isfinite(w)) and abs(w.sum() - 1) < 1e-12


def test_softmax_jacobian_fd_and_row_sums():
    rng = np.random.default_rng(0)
    for _ in range(100):
        xi = rng.normal(0, 2, rng.integers(2, 10))
        J = softmax_jacobian(xi)
        np.testing.assert_allclose(J, central_difference(softmax_weights, xi), atol=1e-8)
        np.testing.assert_allclose(J.sum(axis=1), 0.0, atol=1e-15)


def test_zero_psi_gives_identity():
    assert psi_to_omega(0.0) == 0.0
    np.testing.assert_array_equal(rotation_matrix(0.0, 0, 2, 4), np.eye(4))
    np.testing.assert_allclose(eigenvector_matrix(np.zeros(6), 4), np.eye(4), atol=0)
    np.testing.assert_allclose(covariance(np.zeros(3), np.zeros(3)), np.eye(3), atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(psi=st.floats(-9, 9))
def test_psi_omega_round_trip(psi):
    omega = psi_to_omega(psi)
    assert -math.pi / 2 < omega < math.pi / 2
    assert abs(omega_to_psi(omega) - psi) < 1e-12


def test_psi_omega_round_trip_moderate_range():
    psi = np.linspace(-9, 9, 200001)
    np.testing.assert_allclose(omega_to_psi(psi_to_omega(psi)), psi, atol=1e-12)


def test_omega_matches_printed_form():
    psi = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(psi_to_omega(psi), 0.5 * math.pi * (1 - np.exp(psi)) / (1 + np.exp(psi)), rtol=1e-14, atol=1e-16)


def test_rotation_entries():
    G = rotation_matrix(0.3, 1, 3, 4)
    assert G[1, 1] == G[3, 3] == math.cos(0.3)
    assert G[1, 3] == math.sin(0.3) and G[3, 1] == -math.sin(0.3)


def test_eigenvector_matrix_is_ordered_product():
    rng = np.random.default_rng(1)
    K = 4
    psi = rng.normal(size=6)
    omega = psi_to_omega(psi)
    P = np.eye(K)
    for w, (i, j) in zip(omega, pair_indices(K)):
        P = P @ rotation_matrix(w, i, j, K)
    np.testing.assert_allclose(eigenvector_matrix(psi, K), P, atol=1e-14)


@pytest.mark.parametrize("K", [2, 3, 5])
def test_orthogonality_over_random_draws(K):
    rng = np.random.default_rng(K)
    psi = rng.normal(0, 3, (1000, K * (K - 1) // 2))
    P = eigenvector_matrix(psi, K)
    err = np.linalg.norm(P @ np.swapaxes(P, -1, -2) - np.eye(K), axis=(-2, -1))
    assert err.max() < 1e-10


@pytest.mark.parametrize("K", [2, 3, 5])
def test_covariance_spectrum_symmetry_and_pd(K):
    rng = np.random.default_rng(10 + K)
    x = rng.normal(0, 1, (200, K))
    psi = rng.normal(0, 2, (200, K * (K - 1) // 2))
    S = covariance(x, psi)
    np.testing.assert_allclose(S, np.swapaxes(S, -1, -2), atol=1e-12)
    np.linalg.cholesky(S)
    np.testing.assert_allclose(np.linalg.eigvalsh(S), np.sort(np.exp(x), axis=-1), rtol=1e-10)


def test_wrong_psi_length():
    with pytest.raises(ValueError):
        eigenvector_matrix(np.zeros(2), 3)
