"""Particle Gibbs (conditional SMC with backward sampling) for the latent path."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._cpf import cpf_bs_chain, cpf_bs_sweep
from .model import SsmData, dof


@dataclass(frozen=True)
class PgasConfig:
    n_particles: int = 10
    backward_sampling: bool = True

    def __post_init__(self) -> None:
        if self.n_particles < 2:
            raise ValueError(f"need at least 2 particles, got {self.n_particles}")
        if not self.backward_sampling:
            raise ValueError("only the backward-sampling variant is implemented")


def _draws(rng: np.random.Generator, n_sweeps: int, T: int, n_particles: int):
    normals = rng.standard_normal((n_sweeps, T, n_particles - 1))
    u_resample = rng.random((n_sweeps, T - 1, n_particles - 1))
    u_backward = rng.random((n_sweeps, T))
    return normals, u_resample, u_backward


def cpf_bs_chain_paths(
    start, data: SsmData, m, xi, cfg: PgasConfig, n_sweeps: int, rng: np.random.Generator
) -> np.ndarray:
    """``n_sweeps`` successive kernel moves; returns ``(n_sweeps + 1, T)`` paths."""
    sigma, mu, Sigma = (float(v) for v in xi)
    normals, u_resample, u_backward = _draws(rng, n_sweeps, data.T, cfg.n_particles)
    return cpf_bs_chain(
        np.asarray(start, dtype=float), data.y, float(data.x0), sigma, mu, Sigma, dof(m),
        normals, u_resample, u_backward,
    )


def cpf_bs_kernel(ref_path, data: SsmData, m, xi, cfg: PgasConfig, rng: np.random.Generator) -> np.ndarray:
    """One conditional particle filter sweep with backward sampling.

    Bootstrap proposals, multinomial resampling at every step, the
    reference trajectory frozen in the last particle slot, then one path
    drawn backwards with transition-times-filter weights. Leaves the
    smoothing distribution of ``x_{1:T}`` given ``y_{1:T}`` and ``m`` invariant.
    """
    ref_path = np.asarray(ref_path, dtype=float)
    if ref_path.shape != (data.T,):
        raise ValueError(f"reference path must have length {data.T}")
    sigma, mu, Sigma = (float(v) for v in xi)
    normals, u_resample, u_backward = _draws(rng, 1, data.T, cfg.n_particles)
    out = cpf_bs_sweep(
        ref_path, data.y, float(data.x0), sigma, mu, Sigma, dof(m), normals[0], u_resample[0], u_backward[0]
    )
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("particle weights degenerated during the sweep")
    return out


def prior_path(data: SsmData, xi, rng: np.random.Generator, n_paths: int | None = None) -> np.ndarray:
    """Draw latent path(s) from the AR(1) prior started at ``x0``."""
    _, mu, Sigma = (float(v) for v in xi)
    shape = (data.T,) if n_paths is None else (n_paths, data.T)
    eps = rng.standard_normal(shape) * math.sqrt(Sigma)
    x = np.empty(shape)
    prev = np.full(shape[:-1], float(data.x0))
    for t in range(data.T):
        prev = mu * prev + eps[..., t]
        x[..., t] = prev
    return x
