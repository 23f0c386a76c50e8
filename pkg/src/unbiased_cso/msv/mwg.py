"""Random-walk Metropolis-within-Gibbs sweeps for the MSV posterior.

A sweep visits, in order: the factor blocks ``F_t``, the log-eigenvalue
blocks ``X_t``, the rotation blocks ``Psi_t``, the rows of ``B``, the entries
of ``log V`` and, when enabled, the AR triples of each latent coordinate.

Blocks that are conditionally independent given the rest are updated in one
vectorized pass with independent accept/reject decisions, which is the same
Markov kernel as visiting them one after another. ``F_t`` blocks are mutually
independent; the AR coupling makes ``X_t`` (and ``Psi_t``) independent across
odd times given the even times and vice versa, so those are visited as an odd
half-sweep followed by an even one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    LatentPath,
    MsvState,
    ar_log_terms,
    factor_log_terms,
    obs_log_terms,
)


@dataclass(frozen=True)
class MwgConfig:
    """Random-walk scales and block switches.

    ``step_f`` is relative to the current factor standard deviations
    ``exp(X_t / 2)``; the other scales are absolute in the sampled coordinates.
    """

    step_f: float = 0.15
    step_x: float = 0.15
    step_psi: float = 0.05
    step_b: float = 0.02
    step_log_v: float = 0.1
    step_theta: float = 0.1
    update_latents: bool = True
    update_x: bool = True
    update_psi: bool = True
    update_chi: bool = True
    update_theta: bool = True
    use_likelihood: bool = True

    def __post_init__(self) -> None:
        for name in ("step_f", "step_x", "step_psi", "step_b", "step_log_v", "step_theta"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


def _accept(delta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Metropolis decision per block; non-finite ratios are rejections."""
    log_u = np.log(rng.random(delta.shape))
    with np.errstate(invalid="ignore"):
        return np.isfinite(delta) & (log_u < delta)


def _obs(y, B, V, F, cfg: MwgConfig) -> np.ndarray:
    if not cfg.use_likelihood:
        return np.zeros((F.shape[0], B.shape[0]))
    return obs_log_terms(y, B, V, F)


def _update_factors(y, state: MsvState, cfg: MwgConfig, rng) -> tuple[np.ndarray, float]:
    pr, lat = state.params, state.latents
    F = lat.F
    prop = F + cfg.step_f * np.exp(0.5 * lat.X) * rng.standard_normal(F.shape)
    cur = factor_log_terms(F, lat.X, lat.Psi) + _obs(y, pr.B, pr.V, F, cfg).sum(axis=1)
    new = factor_log_terms(prop, lat.X, lat.Psi) + _obs(y, pr.B, pr.V, prop, cfg).sum(axis=1)
    ok = _accept(new - cur, rng)
    return np.where(ok[:, None], prop, F), float(ok.mean())


def _update_ar_path(path, other, mean, phi, sig, step, which, F, rng):
    """Odd/even half-sweeps over an AR-coupled latent path.

    ``which`` says whether ``path`` enters the factor density as the X or the
    Psi argument; ``other`` is the remaining argument.
    """

    def fac(idx, p):
        return factor_log_terms(F[idx], p, other[idx]) if which == "x" else factor_log_terms(F[idx], other[idx], p)

    T = path.shape[0]
    accepted = 0
    for parity in (1, 0):  # odd times first (1-based), then even
        idx = np.arange(1 - parity, T, 2)
        prop = path.copy()
        prop[idx] += step * rng.standard_normal((idx.size, path.shape[1]))
        d_ar = (ar_log_terms(prop, mean, phi, sig) - ar_log_terms(path, mean, phi, sig)).sum(axis=1)
        nxt = np.append(d_ar[1:], 0.0)  # the transition into t + 1 belongs to block t
        delta = fac(idx, prop[idx]) - fac(idx, path[idx]) + d_ar[idx] + nxt[idx]
        ok = _accept(delta, rng)
        path = path.copy()
        path[idx[ok]] = prop[idx[ok]]
        accepted += int(ok.sum())
    return path, accepted / max(T, 1)


def _update_chi(y, state: MsvState, F, cfg: MwgConfig, rng):
    pr = state.params
    B, log_v = pr.B, np.log(pr.V)

    prop_b = B + cfg.step_b * rng.standard_normal(B.shape)
    d = (_obs(y, prop_b, pr.V, F, cfg) - _obs(y, B, pr.V, F, cfg)).sum(axis=0)
    d += -0.5 * (np.sum(prop_b**2, axis=1) - np.sum(B**2, axis=1))
    ok_b = _accept(d, rng)
    B = np.where(ok_b[:, None], prop_b, B)

    prop_v = log_v + cfg.step_log_v * rng.standard_normal(log_v.shape)
    d = (_obs(y, B, np.exp(prop_v), F, cfg) - _obs(y, B, np.exp(log_v), F, cfg)).sum(axis=0)
    d += -0.5 * (prop_v**2 - log_v**2)
    ok_v = _accept(d, rng)
    log_v = np.where(ok_v, prop_v, log_v)
    return B, np.exp(log_v), float(ok_b.mean()), float(ok_v.mean())


def _ar_theta_terms(path, rows) -> np.ndarray:
    """Per-coordinate log likelihood of ``path`` columns plus the standard normal prior on ``rows``."""
    phi, mean, sig = np.tanh(rows[:, 0] / 2), rows[:, 1], np.exp(rows[:, 2])
    return ar_log_terms(path, mean, phi, sig).sum(axis=0) - 0.5 * np.sum(rows * rows, axis=1)


def _update_theta_rows(path, rows, step, rng):
    if rows.shape[0] == 0:
        return rows, 1.0
    prop = rows + step * rng.standard_normal(rows.shape)
    ok = _accept(_ar_theta_terms(path, prop) - _ar_theta_terms(path, rows), rng)
    return np.where(ok[:, None], prop, rows), float(ok.mean())


def mwg_sweep(state: MsvState, y, cfg: MwgConfig, rng: np.random.Generator) -> MsvState:
    """One full sweep; ``y`` is the ``(T, p)`` array of log gross returns.

    Acceptance rates per block family are attached as ``state.info``.
    Overflow in a proposal's density is an ordinary rejection, so floating
    point warnings are silenced for the duration of the sweep.
    """
    with np.errstate(all="ignore"):
        return _sweep(state, y, cfg, rng)


def _sweep(state: MsvState, y, cfg: MwgConfig, rng: np.random.Generator) -> MsvState:
    pr, lat = state.params, state.latents
    F, X, Psi = lat.F, lat.X, lat.Psi
    rates: dict[str, float] = {}
    if cfg.update_latents:
        F, rates["F"] = _update_factors(y, state, cfg, rng)
        if cfg.update_x:
            X, rates["X"] = _update_ar_path(X, Psi, pr.x0, pr.phi_x, pr.sig_x, cfg.step_x, "x", F, rng)
        if cfg.update_psi and pr.J:
            Psi, rates["Psi"] = _update_ar_path(Psi, X, pr.psi0, pr.phi_psi, pr.sig_psi, cfg.step_psi, "psi", F, rng)
    if cfg.update_chi:
        B, V, rates["B"], rates["V"] = _update_chi(y, state, F, cfg, rng)
        pr = pr.with_chi(B, V)
    if cfg.update_theta:
        tx, tp = pr.theta_tilde()
        tx, rates["theta_x"] = _update_theta_rows(X, tx, cfg.step_theta, rng)
        tp, rates["theta_psi"] = _update_theta_rows(Psi, tp, cfg.step_theta, rng)
        pr = pr.with_theta_tilde(tx, tp)
    return MsvState(pr, LatentPath(F, X, Psi), info={"acceptance": rates})
