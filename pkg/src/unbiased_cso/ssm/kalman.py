"""Exact log-likelihood, score and smoother for the Gaussian-observation case."""

from __future__ import annotations

import math

import numpy as np

from .model import LOG_2PI, SsmData


def kalman_loglik_and_score(data: SsmData, xi) -> tuple[float, np.ndarray]:
    """Log-likelihood and its gradient in ``(sigma, mu, Sigma)``.

    The gradient is propagated alongside the filter: every filter quantity
    carries a 3-vector of partial derivatives.
    """
    sigma, mu, Sigma = (float(v) for v in xi)
    m = float(data.x0)
    V = 0.0
    dm = np.zeros(3)
    dV = np.zeros(3)
    e_sigma, e_mu, e_Sigma = np.eye(3)
    loglik = 0.0
    score = np.zeros(3)
    for y in data.y:
        a = mu * m
        da = e_mu * m + mu * dm
        P = mu * mu * V + Sigma
        dP = 2.0 * mu * V * e_mu + mu * mu * dV + e_Sigma
        F = P + sigma * sigma
        dF = dP + 2.0 * sigma * e_sigma
        v = y - a
        dv = -da
        loglik -= 0.5 * (LOG_2PI + math.log(F) + v * v / F)
        score -= 0.5 * (dF / F + 2.0 * v * dv / F - v * v * dF / F**2)
        K = P / F
        dK = (dP * F - P * dF) / F**2
        m = a + K * v
        dm = da + dK * v + K * dv
        V = P * (1.0 - K)
        dV = dP * (1.0 - K) - P * dK
    return loglik, score


def kalman_loglik(data: SsmData, xi) -> float:
    return kalman_loglik_and_score(data, xi)[0]


def kalman_score(data: SsmData, xi) -> np.ndarray:
    return kalman_loglik_and_score(data, xi)[1]


def kalman_smoother(data: SsmData, xi) -> tuple[np.ndarray, np.ndarray]:
    """Rauch-Tung-Striebel smoothed means and variances of ``x_1..x_T``."""
    sigma, mu, Sigma = (float(v) for v in xi)
    T = data.T
    pred_m = np.empty(T)
    pred_P = np.empty(T)
    filt_m = np.empty(T)
    filt_V = np.empty(T)
    m, V = float(data.x0), 0.0
    for t, y in enumerate(data.y):
        pred_m[t] = mu * m
        pred_P[t] = mu * mu * V + Sigma
        K = pred_P[t] / (pred_P[t] + sigma * sigma)
        m = pred_m[t] + K * (y - pred_m[t])
        V = pred_P[t] * (1.0 - K)
        filt_m[t], filt_V[t] = m, V
    smooth_m = filt_m.copy()
    smooth_V = filt_V.copy()
    for t in range(T - 2, -1, -1):
        J = filt_V[t] * mu / pred_P[t + 1]
        smooth_m[t] = filt_m[t] + J * (smooth_m[t + 1] - pred_m[t + 1])
        smooth_V[t] = filt_V[t] + J * J * (smooth_V[t + 1] - pred_P[t + 1])
    return smooth_m, smooth_V
