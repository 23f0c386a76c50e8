"""Softmax portfolio weights and the Givens-rotation covariance parameterization."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

HALF_PI = 0.5 * math.pi


def softmax_weights(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    e = np.exp(xi - xi.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax_jacobian(xi) -> np.ndarray:
    """``J[a, b] = d omega_a / d xi_b = omega_a (delta_ab - omega_b)``."""
    w = softmax_weights(xi)
    return np.diag(w) - np.outer(w, w)


@lru_cache(maxsize=None)
def pair_indices(K: int) -> tuple[tuple[int, int], ...]:
    """Rotation planes ``(i, j)``, ``i < j``, in lexicographic order."""
    return tuple((i, j) for i in range(K) for j in range(i + 1, K))


def n_pairs(K: int) -> int:
    return K * (K - 1) // 2


def psi_to_omega(psi):
    """Invert ``psi = log(pi/2 - omega) - log(pi/2 + omega)``."""
    return -HALF_PI * np.tanh(0.5 * np.asarray(psi, dtype=float))


def omega_to_psi(omega):
    omega = np.asarray(omega, dtype=float)
    return np.log(HALF_PI - omega) - np.log(HALF_PI + omega)


def rotation_matrix(omega: float, i: int, j: int, K: int) -> np.ndarray:
    G = np.eye(K)
    c, s = math.cos(omega), math.sin(omega)
    G[i, i] = c
    G[j, j] = c
    G[i, j] = s
    G[j, i] = -s
    return G


def eigenvector_matrix(psi, K: int) -> np.ndarray:
    """Ordered product of the Givens rotations; ``psi`` may carry leading batch axes.

    Right-multiplying by ``G_ij`` only mixes columns ``i`` and ``j``, which is
    how the product is accumulated.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.shape[-1] != n_pairs(K):
        raise ValueError(f"expected {n_pairs(K)} rotation parameters for K={K}, got {psi.shape[-1]}")
    omega = psi_to_omega(psi)
    P = np.broadcast_to(np.eye(K), psi.shape[:-1] + (K, K)).copy()
    cos, sin = np.cos(omega), np.sin(omega)
    for idx, (i, j) in enumerate(pair_indices(K)):
        c = cos[..., idx, None]
        s = sin[..., idx, None]
        col_i = P[..., :, i].copy()
        col_j = P[..., :, j]
        P[..., :, i] = c * col_i - s * col_j
        P[..., :, j] = s * col_i + c * col_j
    return P


def covariance(x, psi) -> np.ndarray:
    """``Sigma = P diag(exp(x)) P^T``; batch axes allowed."""
    x = np.asarray(x, dtype=float)
    K = x.shape[-1]
    P = eigenvector_matrix(psi, K)
    return (P * np.exp(x)[..., None, :]) @ np.swapaxes(P, -1, -2)
