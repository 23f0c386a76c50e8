"""Mean-variance payoff over the horizon and its gradient in the logits.

    g = (1/T') sum_t [ w'R_t - (zeta/2) (w'(R_t - mu_t)) (w'(R_t - mu'_t)) ]

``mu'`` equals ``mu`` unless a second, independently computed predictive
mean is supplied, in which case the product of the two centered terms is an
unbiased estimate of the squared centering around the exact mean.
All functions accept leading batch axes on ``R`` (and on the means).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .structure import softmax_jacobian, softmax_weights


@dataclass(frozen=True)
class PayoffConfig:
    zeta: float = 20.0
    history: int = 100
    horizon: int = 5
    predictive_batch: int = 64
    independent_means: bool = False

    def __post_init__(self) -> None:
        if not self.zeta >= 0:
            raise ValueError(f"zeta must be non-negative, got {self.zeta}")
        for name in ("history", "horizon", "predictive_batch"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


def _centered(R, mu, mu_b):
    R = np.asarray(R, dtype=float)
    a = R - np.asarray(mu, dtype=float)
    b = a if mu_b is None else R - np.asarray(mu_b, dtype=float)
    return R, a, b


def payoff_g(R, mu, omega, zeta: float, mu_b=None) -> np.ndarray:
    """Payoff for weights ``omega``; ``R`` and ``mu`` have shape (..., T', p)."""
    R, a, b = _centered(R, mu, mu_b)
    w = np.asarray(omega, dtype=float)
    return np.mean(R @ w - 0.5 * zeta * (a @ w) * (b @ w), axis=-1)


def grad_payoff_wrt_weights(R, mu, omega, zeta: float, mu_b=None) -> np.ndarray:
    R, a, b = _centered(R, mu, mu_b)
    w = np.asarray(omega, dtype=float)
    aw, bw = (a @ w)[..., None], (b @ w)[..., None]
    return np.mean(R - 0.5 * zeta * (a * bw + b * aw), axis=-2)


def grad_payoff_wrt_logits(R, mu, xi, zeta: float, mu_b=None) -> np.ndarray:
    """Chain rule through the softmax: ``J(xi)^T dg/domega``."""
    xi = np.asarray(xi, dtype=float)
    dg = grad_payoff_wrt_weights(R, mu, softmax_weights(xi), zeta, mu_b)
    return dg @ softmax_jacobian(xi)  # J is symmetric, so this is J^T dg
