"""Linear-Gaussian latent AR(1) with Student-t or Gaussian observations.

    X_n = mu X_{n-1} + sqrt(Sigma) eps_n,        X_0 = x0 fixed
    Y_n | X_n, m ~ t_m(X_n, sigma)  or  N(X_n, sigma^2) for the Gaussian tag

The static parameter is ``xi = (sigma, mu, Sigma)``; ``sigma`` is a scale for
the Student-t and a standard deviation for the Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

GAUSSIAN = "gaussian"
LOG_2PI = math.log(2.0 * math.pi)


class SsmDomainError(ValueError):
    pass


@dataclass(frozen=True)
class SsmParams:
    sigma: float
    mu: float
    Sigma: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise SsmDomainError(f"sigma must be positive, got {self.sigma}")
        if not (np.isfinite(self.Sigma) and self.Sigma > 0):
            raise SsmDomainError(f"Sigma must be positive, got {self.Sigma}")
        if not abs(self.mu) < 1:
            raise SsmDomainError(f"mu must lie in (-1, 1), got {self.mu}")

    @classmethod
    def from_vector(cls, xi) -> "SsmParams":
        sigma, mu, Sigma = (float(v) for v in xi)
        return cls(sigma, mu, Sigma)

    def as_vector(self) -> np.ndarray:
        return np.array([self.sigma, self.mu, self.Sigma])


@dataclass(frozen=True)
class SsmData:
    y: np.ndarray
    x0: float = 0.0
    x_true: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if y.size < 1 or not np.all(np.isfinite(y)):
            raise SsmDomainError("observations must be a non-empty finite vector")
        object.__setattr__(self, "y", y)
        if self.x_true is not None:
            x = np.asarray(self.x_true, dtype=float).reshape(-1)
            if x.shape != y.shape:
                raise SsmDomainError("x_true must match y in length")
            object.__setattr__(self, "x_true", x)

    @property
    def T(self) -> int:
        return self.y.size


def check_model_index(m) -> None:
    if m == GAUSSIAN:
        return
    if isinstance(m, (int, np.integer, float)) and not isinstance(m, bool) and m > 0 and math.isfinite(m):
        return
    raise SsmDomainError(f"model index must be a positive degrees-of-freedom value or {GAUSSIAN!r}, got {m!r}")


def dof(m) -> float:
    """Degrees of freedom as a float, ``inf`` for the Gaussian tag."""
    check_model_index(m)
    return math.inf if m == GAUSSIAN else float(m)


def simulate(params: SsmParams, m, T: int, rng: np.random.Generator, x0: float = 0.0) -> SsmData:
    check_model_index(m)
    if T < 1:
        raise SsmDomainError(f"T must be >= 1, got {T}")
    eps = rng.standard_normal(T)
    x = np.empty(T)
    prev = x0
    sd = math.sqrt(params.Sigma)
    for n in range(T):
        prev = params.mu * prev + sd * eps[n]
        x[n] = prev
    noise = rng.standard_normal(T) if m == GAUSSIAN else rng.standard_t(float(m), size=T)
    y = x + params.sigma * noise
    return SsmData(y=y, x0=x0, x_true=x, meta={"xi": params.as_vector().tolist(), "m": m})


def log_obs_density(y, x, sigma: float, m):
    if not sigma > 0:
        raise SsmDomainError(f"sigma must be positive, got {sigma}")
    r = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    if m == GAUSSIAN:
        return -0.5 * LOG_2PI - math.log(sigma) - 0.5 * (r / sigma) ** 2
    nu = dof(m)
    const = gammaln(0.5 * (nu + 1.0)) - gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi) - math.log(sigma)
    return const - 0.5 * (nu + 1.0) * np.log1p((r / sigma) ** 2 / nu)


def grad_obs(y, x, sigma: float, m):
    """Partial derivatives of :func:`log_obs_density` in ``sigma`` and ``x``."""
    if not sigma > 0:
        raise SsmDomainError(f"sigma must be positive, got {sigma}")
    r = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    if m == GAUSSIAN:
        return -1.0 / sigma + r**2 / sigma**3, r / sigma**2
    nu = dof(m)
    denom = nu * sigma**2 + r**2
    return -1.0 / sigma + (nu + 1.0) * r**2 / (sigma * denom), (nu + 1.0) * r / denom


def log_transition(x_next, x_prev, mu: float, Sigma: float):
    if not Sigma > 0:
        raise SsmDomainError(f"Sigma must be positive, got {Sigma}")
    dev = np.asarray(x_next, dtype=float) - mu * np.asarray(x_prev, dtype=float)
    return -0.5 * (LOG_2PI + math.log(Sigma)) - 0.5 * dev**2 / Sigma


def grad_transition(x_next, x_prev, mu: float, Sigma: float):
    """Partial derivatives of :func:`log_transition` in ``mu`` and ``Sigma``."""
    if not Sigma > 0:
        raise SsmDomainError(f"Sigma must be positive, got {Sigma}")
    x_prev = np.asarray(x_prev, dtype=float)
    dev = np.asarray(x_next, dtype=float) - mu * x_prev
    return dev * x_prev / Sigma, -0.5 / Sigma + 0.5 * dev**2 / Sigma**2


def complete_log_likelihood(path, data: SsmData, m, xi) -> float:
    sigma, mu, Sigma = (float(v) for v in xi)
    path = np.asarray(path, dtype=float)
    prev = np.concatenate(([data.x0], path[:-1]))
    return float(np.sum(log_obs_density(data.y, path, sigma, m)) + np.sum(log_transition(path, prev, mu, Sigma)))


def score_integrand(path, data: SsmData, m, xi) -> np.ndarray:
    """Gradient in ``(sigma, mu, Sigma)`` of the complete-data log density.

    ``path`` may be a single latent path of length ``T`` or a stack of paths
    with shape ``(n, T)``; the result has shape ``(3,)`` or ``(n, 3)``.
    """
    sigma, mu, Sigma = (float(v) for v in xi)
    paths = np.asarray(path, dtype=float)
    single = paths.ndim == 1
    paths = np.atleast_2d(paths)
    if paths.shape[1] != data.T:
        raise SsmDomainError(f"path length {paths.shape[1]} does not match T={data.T}")
    prev = np.empty_like(paths)
    prev[:, 0] = data.x0
    prev[:, 1:] = paths[:, :-1]
    d_sigma, _ = grad_obs(data.y, paths, sigma, m)
    d_mu, d_Sigma = grad_transition(paths, prev, mu, Sigma)
    out = np.column_stack([d_sigma.sum(axis=1), d_mu.sum(axis=1), d_Sigma.sum(axis=1)])
    return out[0] if single else out


def stationary_variance(params: SsmParams) -> float:
    return params.Sigma / (1.0 - params.mu**2)
