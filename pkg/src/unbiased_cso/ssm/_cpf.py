"""Compiled conditional particle filter with backward sampling.

All randomness is drawn by the caller and passed in as arrays, which keeps
the kernel a pure function of its inputs and the caller's generator.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _log_obs_unnorm(r, sigma, nu):
    # constants shared by all particles at a time step are dropped
    if math.isinf(nu):
        return -0.5 * (r / sigma) ** 2
    return -0.5 * (nu + 1.0) * math.log1p((r / sigma) ** 2 / nu)


@njit(cache=True)
def _pick(logw, u):
    n = logw.shape[0]
    top = logw.max()
    total = 0.0
    w = np.empty(n)
    for i in range(n):
        w[i] = math.exp(logw[i] - top)
        total += w[i]
    target = u * total
    acc = 0.0
    for i in range(n):
        acc += w[i]
        if target < acc:
            return i
    return n - 1


@njit(cache=True)
def cpf_bs_sweep(ref, y, x0, sigma, mu, Sigma, nu, normals, u_resample, u_backward):
    """One conditional-SMC sweep followed by a backward-simulation pass.

    ``normals`` has shape ``(T, N - 1)``, ``u_resample`` ``(T - 1, N - 1)``
    and ``u_backward`` ``(T,)``. The reference path occupies the last slot.
    """
    T = y.shape[0]
    n_free = normals.shape[1]
    N = n_free + 1
    sd = math.sqrt(Sigma)
    particles = np.empty((T, N))
    logw = np.empty((T, N))

    for i in range(n_free):
        particles[0, i] = mu * x0 + sd * normals[0, i]
    particles[0, n_free] = ref[0]
    for i in range(N):
        logw[0, i] = _log_obs_unnorm(y[0] - particles[0, i], sigma, nu)

    for t in range(1, T):
        for i in range(n_free):
            a = _pick(logw[t - 1], u_resample[t - 1, i])
            particles[t, i] = mu * particles[t - 1, a] + sd * normals[t, i]
        particles[t, n_free] = ref[t]
        for i in range(N):
            logw[t, i] = _log_obs_unnorm(y[t] - particles[t, i], sigma, nu)

    out = np.empty(T)
    b = _pick(logw[T - 1], u_backward[T - 1])
    out[T - 1] = particles[T - 1, b]
    back = np.empty(N)
    for t in range(T - 2, -1, -1):
        nxt = out[t + 1]
        for i in range(N):
            dev = nxt - mu * particles[t, i]
            back[i] = logw[t, i] - 0.5 * dev * dev / Sigma
        b = _pick(back, u_backward[t])
        out[t] = particles[t, b]
    return out


@njit(cache=True)
def cpf_bs_chain(start, y, x0, sigma, mu, Sigma, nu, normals, u_resample, u_backward):
    """Iterate :func:`cpf_bs_sweep`; returns the start plus every new state."""
    n_sweeps = normals.shape[0]
    T = y.shape[0]
    paths = np.empty((n_sweeps + 1, T))
    paths[0] = start
    for s in range(n_sweeps):
        paths[s + 1] = cpf_bs_sweep(
            paths[s], y, x0, sigma, mu, Sigma, nu, normals[s], u_resample[s], u_backward[s]
        )
    return paths
