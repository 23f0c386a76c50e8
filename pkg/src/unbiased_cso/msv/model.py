"""Full-factor multivariate stochastic volatility model.

Latent process ``u_t = (F_t, X_t, Psi_t)``:

    X_{i,t}   = x_{i,0} + phi_i (X_{i,t-1} - x_{i,0}) + sigma_i eta,     X_0 = x_0
    Psi_{ij,t} = psi_{ij,0} + phi_ij (Psi_{ij,t-1} - psi_{ij,0}) + sigma_ij eta, Psi_0 = psi_0
    F_t | Sigma_t ~ N_K(0, Sigma_t),  Sigma_t = P_t diag(exp X_t) P_t^T
    log(1 + R_t) | B, V, F_t ~ N_p(B F_t, diag V)

The AR triples are also carried in unconstrained coordinates
``(a, mean, log sigma)`` with ``phi = tanh(a / 2)``; the priors are standard
normal in those coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .structure import eigenvector_matrix, n_pairs

LOG_2PI = math.log(2.0 * math.pi)


class MsvDomainError(ValueError):
    pass


def _vec(name: str, value, size: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1) if np.ndim(value) else np.full(size, float(value))
    if arr.shape != (size,):
        raise MsvDomainError(f"{name} must have {size} entries, got shape {np.shape(value)}")
    if not np.all(np.isfinite(arr)):
        raise MsvDomainError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class MsvParams:
    """``chi = (B, V)`` and ``theta~ = (theta_x, theta_psi)``.

    Noise scales may be zero (deterministic latent paths); everything else
    obeys the model invariants.
    """

    B: np.ndarray
    V: np.ndarray
    phi_x: np.ndarray
    x0: np.ndarray
    sig_x: np.ndarray
    phi_psi: np.ndarray
    psi0: np.ndarray
    sig_psi: np.ndarray

    def __post_init__(self) -> None:
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.ndim != 2 or not np.all(np.isfinite(B)):
            raise MsvDomainError("B must be a finite p x K matrix")
        p, K = B.shape
        J = n_pairs(K)
        object.__setattr__(self, "B", B)
        for name, size in (("V", p), ("phi_x", K), ("x0", K), ("sig_x", K),
                           ("phi_psi", J), ("psi0", J), ("sig_psi", J)):
            object.__setattr__(self, name, _vec(name, getattr(self, name), size))
        if np.any(self.V <= 0):
            raise MsvDomainError(f"idiosyncratic variances must be positive, got {self.V}")
        for name in ("phi_x", "phi_psi"):
            if np.any(np.abs(getattr(self, name)) >= 1):
                raise MsvDomainError(f"{name} must lie in (-1, 1)")
        for name in ("sig_x", "sig_psi"):
            if np.any(getattr(self, name) < 0):
                raise MsvDomainError(f"{name} must be non-negative")

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @property
    def K(self) -> int:
        return self.B.shape[1]

    @property
    def J(self) -> int:
        return n_pairs(self.K)

    def theta_tilde(self) -> tuple[np.ndarray, np.ndarray]:
        """Unconstrained ``(a, mean, log sigma)`` rows for the X and Psi processes."""
        with np.errstate(divide="ignore"):
            tx = np.column_stack([2 * np.arctanh(self.phi_x), self.x0, np.log(self.sig_x)])
            tp = np.column_stack([2 * np.arctanh(self.phi_psi), self.psi0, np.log(self.sig_psi)])
        return tx.reshape(self.K, 3), tp.reshape(self.J, 3)

    def with_theta_tilde(self, tx, tp) -> "MsvParams":
        tx = np.asarray(tx, dtype=float).reshape(self.K, 3)
        tp = np.asarray(tp, dtype=float).reshape(self.J, 3)
        return MsvParams(
            self.B, self.V,
            np.tanh(tx[:, 0] / 2), tx[:, 1], np.exp(tx[:, 2]),
            np.tanh(tp[:, 0] / 2), tp[:, 1], np.exp(tp[:, 2]),
        )

    def with_chi(self, B, V) -> "MsvParams":
        return MsvParams(B, V, self.phi_x, self.x0, self.sig_x, self.phi_psi, self.psi0, self.sig_psi)

    def theta_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("phi_x", "x0", "sig_x", "phi_psi", "psi0", "sig_psi")}

    def chi_dict(self) -> dict:
        return {"B": self.B.tolist(), "V": self.V.tolist()}

    @classmethod
    def from_dicts(cls, theta: dict, chi: dict) -> "MsvParams":
        return cls(B=np.array(chi["B"], dtype=float).reshape(len(chi["V"]), -1), V=chi["V"], **theta)


@dataclass(frozen=True)
class LatentPath:
    """Rows indexed by time ``t = 1..T``."""

    F: np.ndarray
    X: np.ndarray
    Psi: np.ndarray

    def __post_init__(self) -> None:
        F, X = np.atleast_2d(self.F), np.atleast_2d(self.X)
        T, K = X.shape
        Psi = np.asarray(self.Psi, dtype=float).reshape(T, n_pairs(K))
        if F.shape != (T, K):
            raise MsvDomainError(f"F has shape {F.shape}, expected {(T, K)}")
        object.__setattr__(self, "F", np.asarray(F, dtype=float))
        object.__setattr__(self, "X", np.asarray(X, dtype=float))
        object.__setattr__(self, "Psi", Psi)

    @property
    def T(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class MsvState:
    params: MsvParams
    latents: LatentPath
    info: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------- simulation


def _ar_forward(start, mean, phi, sig, eps) -> np.ndarray:
    """AR(1) paths from ``start``; ``eps`` has shape (..., h, n)."""
    out = np.empty_like(eps)
    prev = np.broadcast_to(start, eps.shape[:-2] + eps.shape[-1:]).astype(float)
    for t in range(eps.shape[-2]):
        prev = mean + phi * (prev - mean) + sig * eps[..., t, :]
        out[..., t, :] = prev
    return out


def draw_factors(X, Psi, rng: np.random.Generator) -> np.ndarray:
    """``F ~ N(0, P diag(exp X) P^T)`` row by row (batch axes allowed)."""
    X = np.asarray(X, dtype=float)
    P = eigenvector_matrix(Psi, X.shape[-1])
    eps = rng.standard_normal(X.shape) * np.exp(0.5 * X)
    return np.einsum("...kj,...j->...k", P, eps)


def simulate_latents(params: MsvParams, T: int, rng: np.random.Generator) -> LatentPath:
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    eps_x = rng.standard_normal((T, params.K))
    eps_p = rng.standard_normal((T, params.J))
    X = _ar_forward(params.x0, params.x0, params.phi_x, params.sig_x, eps_x)
    Psi = _ar_forward(params.psi0, params.psi0, params.phi_psi, params.sig_psi, eps_p)
    return LatentPath(draw_factors(X, Psi, rng), X, Psi)


def forward_latents(params: MsvParams, x_last, psi_last, horizon: int, rng: np.random.Generator, n: int | None = None):
    """Continue the X and Psi processes ``horizon`` steps from the last state."""
    lead = () if n is None else (n,)
    eps_x = rng.standard_normal(lead + (horizon, params.K))
    eps_p = rng.standard_normal(lead + (horizon, params.J))
    X = _ar_forward(x_last, params.x0, params.phi_x, params.sig_x, eps_x)
    Psi = _ar_forward(psi_last, params.psi0, params.phi_psi, params.sig_psi, eps_p)
    return X, Psi


def simulate_returns(B, V, F, rng: np.random.Generator) -> np.ndarray:
    B = np.atleast_2d(np.asarray(B, dtype=float))
    F = np.asarray(F, dtype=float)
    mean = F @ B.T
    return np.expm1(mean + np.sqrt(np.asarray(V, dtype=float)) * rng.standard_normal(mean.shape))


def simulate_forward(params: MsvParams, x_last, psi_last, horizon: int, rng: np.random.Generator, n: int | None = None):
    """Joint forward draw of ``(R, X, Psi, F)`` over the horizon."""
    X, Psi = forward_latents(params, x_last, psi_last, horizon, rng, n)
    F = draw_factors(X, Psi, rng)
    R = simulate_returns(params.B, params.V, F, rng)
    return R, X, Psi, F


def conditional_return_mean(params: MsvParams, X, Psi) -> np.ndarray:
    """``E[R | Sigma] = exp(0.5 (B Sigma B^T + diag V)_ii) - 1``."""
    P = eigenvector_matrix(Psi, params.K)
    BP = np.einsum("ik,...kj->...ij", params.B, P)
    var = np.einsum("...ij,...j->...i", BP * BP, np.exp(X)) + params.V
    return np.expm1(0.5 * var)


def predictive_mean(params: MsvParams, x_last, psi_last, horizon: int, batch: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo estimate of ``E[R_{T+h} | u_T, chi, theta~]`` for ``h = 1..horizon``.

    Returns a ``(horizon, p)`` array; each row averages the closed-form
    conditional mean over ``batch`` independent forward latent paths.
    """
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    X, Psi = forward_latents(params, x_last, psi_last, horizon, rng, batch)
    return conditional_return_mean(params, X, Psi).mean(axis=0)


# ------------------------------------------------------------------ densities


def ar_log_terms(path, mean, phi, sig) -> np.ndarray:
    """Per-element AR(1) transition log densities, the path started at its mean."""
    path = np.asarray(path, dtype=float)
    prev = np.concatenate([np.broadcast_to(mean, (1,) + path.shape[1:]), path[:-1]], axis=0)
    resid = path - mean - phi * (prev - mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -0.5 * (LOG_2PI + 2 * np.log(sig) + (resid / sig) ** 2)


def factor_log_terms(F, X, Psi) -> np.ndarray:
    """``log N(F_t; 0, Sigma_t)`` per time step (batch axes allowed)."""
    X = np.asarray(X, dtype=float)
    K = X.shape[-1]
    P = eigenvector_matrix(Psi, K)
    rot = np.einsum("...kj,...k->...j", P, F)  # P^T F
    return -0.5 * (K * LOG_2PI + X.sum(axis=-1) + np.sum(rot * rot * np.exp(-X), axis=-1))


def obs_log_terms(y, B, V, F) -> np.ndarray:
    """``log N(y_{t,i}; (B F_t)_i, V_i)`` as a ``(T, p)`` array; ``y = log(1 + R)``."""
    resid = np.asarray(y, dtype=float) - np.asarray(F, dtype=float) @ np.asarray(B, dtype=float).T
    return -0.5 * (LOG_2PI + np.log(V) + resid * resid / V)


def log_prior_theta(tx, tp) -> float:
    return float(-0.5 * (np.sum(np.square(tx)) + np.sum(np.square(tp))))


def log_prior_chi(B, V) -> float:
    return float(-0.5 * (np.sum(np.square(B)) + np.sum(np.square(np.log(V)))))


def sample_theta_prior(K: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    return rng.standard_normal((K, 3)), rng.standard_normal((n_pairs(K), 3))


def log_posterior(state: MsvState, y, include_theta: bool = True) -> float:
    """Unnormalized log posterior density of the full state (transformed coordinates)."""
    pr, lat = state.params, state.latents
    total = (
        np.sum(obs_log_terms(y, pr.B, pr.V, lat.F))
        + np.sum(factor_log_terms(lat.F, lat.X, lat.Psi))
        + np.sum(ar_log_terms(lat.X, pr.x0, pr.phi_x, pr.sig_x))
        + np.sum(ar_log_terms(lat.Psi, pr.psi0, pr.phi_psi, pr.sig_psi))
        + log_prior_chi(pr.B, pr.V)
    )
    if include_theta:
        total += log_prior_theta(*pr.theta_tilde())
    return float(total)
