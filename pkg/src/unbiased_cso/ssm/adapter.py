"""Embedding of the model-averaged score as a conditional stochastic optimization problem.

Outer state: the observation-model index ``m``, redrawn i.i.d. from a uniform
prior over the candidate set. Inner state: the latent path, moved by
particle Gibbs. ``g`` is the complete-data score and ``f`` is linear, so the
assembled term reduces to the inner posterior mean of the score.

The initial law of each inner chain is an AR(1) prior path moved by
``init_sweeps`` particle Gibbs sweeps (``0`` gives the bare prior path).
With ``per_observation`` the score is divided by ``T``, i.e. the target is
the average rather than the total log-likelihood (same maximizer).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import PgasConfig, cpf_bs_chain_paths, prior_path
from .model import GAUSSIAN, SsmData, check_model_index, score_integrand

_IDENTITY = np.eye(3)


@dataclass(frozen=True)
class SsmCsoModel:
    data: SsmData
    models: tuple
    cfg: PgasConfig = PgasConfig()
    sweeps_per_step: int = 1
    init_sweeps: int = 1
    per_observation: bool = False

    def __post_init__(self) -> None:
        if not self.models:
            raise ValueError("the model set must be non-empty")
        for m in self.models:
            check_model_index(m)
        if self.sweeps_per_step < 1:
            raise ValueError(f"sweeps_per_step must be >= 1, got {self.sweeps_per_step}")
        if self.init_sweeps < 0:
            raise ValueError(f"init_sweeps must be >= 0, got {self.init_sweeps}")

    @property
    def _scale(self) -> float:
        return 1.0 / self.data.T if self.per_observation else 1.0

    def eval_g(self, z, x, xi):
        return self._scale * score_integrand(x, self.data, z, xi)

    def eval_grad_g(self, z, x, xi):
        return _IDENTITY

    def eval_path(self, z, states, xi):
        g = self._scale * score_integrand(np.asarray(states), self.data, z, xi)
        return g, np.broadcast_to(_IDENTITY, (g.shape[0], 3, 3))

    def eval_grad_f(self, z, u):
        return np.asarray(u, dtype=float)

    def sample_initial(self, z, xi, rng):
        # prior path pushed through init_sweeps kernel moves
        start = prior_path(self.data, xi, rng)
        if self.init_sweeps:
            start = cpf_bs_chain_paths(start, self.data, z, xi, self.cfg, self.init_sweeps, rng)[-1]
        return start

    def inner_step(self, z, x, xi, rng):
        paths = cpf_bs_chain_paths(x, self.data, z, xi, self.cfg, self.sweeps_per_step, rng)
        return paths[-1]

    def sample_segment(self, z, xi, n_transitions, rng):
        start = self.sample_initial(z, xi, rng)
        paths = cpf_bs_chain_paths(start, self.data, z, xi, self.cfg, n_transitions * self.sweeps_per_step, rng)
        return paths[:: self.sweeps_per_step]

    def outer_step(self, z, rng):
        return self.models[int(rng.integers(len(self.models)))]


def model_set(m_max: int | None, include_gaussian: bool = True) -> tuple:
    """Candidate set ``{1, ..., m_max}`` plus (optionally) the Gaussian tag."""
    models: list = list(range(1, m_max + 1)) if m_max else []
    if include_gaussian:
        models.append(GAUSSIAN)
    return tuple(models)


def cso_adapter(
    data: SsmData,
    models=None,
    cfg: PgasConfig | None = None,
    sweeps_per_step: int = 1,
    init_sweeps: int = 1,
    per_observation: bool = False,
) -> SsmCsoModel:
    return SsmCsoModel(
        data=data,
        models=tuple(models) if models is not None else (GAUSSIAN,),
        cfg=cfg or PgasConfig(),
        sweeps_per_step=sweeps_per_step,
        init_sweeps=init_sweeps,
        per_observation=per_observation,
    )
