"""The portfolio problem in the two conditional stochastic optimization framings.

Framework 1
    Outer state: posterior draw of ``(theta, u_{1:T})`` moved by one MwG
    sweep per outer step, together with the predictive means computed from
    it. Inner state: the future returns over the horizon, drawn exactly and
    independently, so every "chain" is an i.i.d. sequence.

Framework 2
    Outer state: ``theta~`` drawn i.i.d. from its prior. Inner state:
    ``(u_{1:T}, chi)`` moved by MwG sweeps with ``theta~`` frozen, followed by
    a fresh forward draw of the future returns and of the predictive means.
    Inner chains start from a fixed anchor state (for example a posterior
    draw) moved by one sweep under the current ``theta~``.

In both framings ``g`` is the scalar payoff and ``f`` the identity, so the
gradient estimate is an average of ``J(xi)^T dg/domega`` terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MsvParams, MsvState, predictive_mean, sample_theta_prior, simulate_forward
from .mwg import MwgConfig, mwg_sweep
from .payoff import PayoffConfig, grad_payoff_wrt_logits, payoff_g
from .structure import softmax_weights

_ONE = np.ones(1)


@dataclass(frozen=True)
class PredictiveDraw:
    """Future returns over the horizon plus the predictive means used to centre them."""

    R: np.ndarray
    mu: np.ndarray
    mu_b: np.ndarray | None = None


@dataclass(frozen=True)
class F1Outer:
    state: MsvState
    mu: np.ndarray
    mu_b: np.ndarray | None = None


@dataclass(frozen=True)
class F2Inner:
    state: MsvState
    draw: PredictiveDraw


def _means(params: MsvParams, state: MsvState, payoff: PayoffConfig, rng):
    x_last, psi_last = state.latents.X[-1], state.latents.Psi[-1]
    mu = predictive_mean(params, x_last, psi_last, payoff.horizon, payoff.predictive_batch, rng)
    mu_b = None
    if payoff.independent_means:
        mu_b = predictive_mean(params, x_last, psi_last, payoff.horizon, payoff.predictive_batch, rng)
    return mu, mu_b


class _PayoffModel:
    payoff: PayoffConfig

    def eval_grad_f(self, z, u):
        return _ONE

    def _g(self, R, mu, mu_b, xi):
        return np.atleast_1d(payoff_g(R, mu, softmax_weights(xi), self.payoff.zeta, mu_b))

    def _grad(self, R, mu, mu_b, xi):
        return grad_payoff_wrt_logits(R, mu, xi, self.payoff.zeta, mu_b)[..., None, :]


@dataclass(frozen=True)
class MsvF1Model(_PayoffModel):
    y: np.ndarray
    payoff: PayoffConfig = PayoffConfig()
    mwg: MwgConfig = MwgConfig()

    def initial_outer(self, state: MsvState, rng: np.random.Generator) -> F1Outer:
        return F1Outer(state, *_means(state.params, state, self.payoff, rng))

    def outer_step(self, z: F1Outer, rng):
        state = mwg_sweep(z.state, self.y, self.mwg, rng)
        return self.initial_outer(state, rng)

    def _draw(self, z: F1Outer, rng, n=None):
        lat = z.state.latents
        R, *_ = simulate_forward(z.state.params, lat.X[-1], lat.Psi[-1], self.payoff.horizon, rng, n)
        return R

    def sample_initial(self, z, xi, rng):
        return self._draw(z, rng)

    def inner_step(self, z, x, xi, rng):
        return self._draw(z, rng)

    def sample_segment(self, z, xi, n_transitions, rng):
        return self._draw(z, rng, n_transitions + 1)

    def eval_g(self, z, x, xi):
        return self._g(x, z.mu, z.mu_b, xi)

    def eval_grad_g(self, z, x, xi):
        return self._grad(x, z.mu, z.mu_b, xi)

    def eval_path(self, z, states, xi):
        R = np.asarray(states)
        g = payoff_g(R, z.mu, softmax_weights(xi), self.payoff.zeta, z.mu_b)[:, None]
        return g, self._grad(R, z.mu, z.mu_b, xi)


@dataclass(frozen=True)
class MsvF2Model(_PayoffModel):
    """Outer state is the ``(K, 3), (J, 3)`` pair of unconstrained AR rows."""

    y: np.ndarray
    anchor: MsvState
    payoff: PayoffConfig = PayoffConfig()
    mwg: MwgConfig = MwgConfig(update_theta=False)

    def __post_init__(self) -> None:
        if self.mwg.update_theta:
            object.__setattr__(self, "mwg", MwgConfig(**{**self.mwg.__dict__, "update_theta": False}))

    def outer_step(self, z, rng):
        return sample_theta_prior(self.anchor.params.K, rng)

    def _advance(self, state: MsvState, rng) -> F2Inner:
        state = mwg_sweep(state, self.y, self.mwg, rng)
        lat = state.latents
        R, *_ = simulate_forward(state.params, lat.X[-1], lat.Psi[-1], self.payoff.horizon, rng)
        mu, mu_b = _means(state.params, state, self.payoff, rng)
        return F2Inner(state, PredictiveDraw(R, mu, mu_b))

    def sample_initial(self, z, xi, rng):
        params = self.anchor.params.with_theta_tilde(*z)
        return self._advance(MsvState(params, self.anchor.latents), rng)

    def inner_step(self, z, x: F2Inner, xi, rng):
        return self._advance(x.state, rng)

    def eval_g(self, z, x: F2Inner, xi):
        return self._g(x.draw.R, x.draw.mu, x.draw.mu_b, xi)

    def eval_grad_g(self, z, x: F2Inner, xi):
        return self._grad(x.draw.R, x.draw.mu, x.draw.mu_b, xi)


def cso_adapter_f1(y, payoff: PayoffConfig | None = None, mwg: MwgConfig | None = None) -> MsvF1Model:
    return MsvF1Model(np.asarray(y, dtype=float), payoff or PayoffConfig(), mwg or MwgConfig())


def cso_adapter_f2(y, anchor: MsvState, payoff: PayoffConfig | None = None, mwg: MwgConfig | None = None) -> MsvF2Model:
    return MsvF2Model(np.asarray(y, dtype=float), anchor, payoff or PayoffConfig(), mwg or MwgConfig(update_theta=False))
