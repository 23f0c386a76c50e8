"""Markovian stochastic approximation driven by the randomized gradient estimator.

At iteration ``n`` the outer chain makes a move ``z_n ~ K(z_{n-1}, .)`` and the
parameter is updated with the average of ``S`` independent estimates taken at
``(z_n, xi_{n-1})``:

    xi~_n = xi~_{n-1} + sign * gamma_n * J(xi_{n-1}) * H_S(z_n, xi_{n-1})

where ``xi~`` are unconstrained coordinates and ``J`` is the diagonal Jacobian
``d xi / d xi~`` of the reparameterization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .estimator import CsoModel, estimate_H_batch
from .levels import LevelDistribution

log = logging.getLogger(__name__)

DEFAULT_BLOCK = "default"


class ScheduleError(ValueError):
    pass


class MsaDivergence(FloatingPointError):
    """Raised when an iterate becomes non-finite; carries the steps so far."""

    def __init__(self, message: str, trajectory: "MsaTrajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class StepSchedule:
    gamma0: dict = field(default_factory=lambda: {DEFAULT_BLOCK: 0.1})
    offset: int = 100
    exponent: float = 0.6

    def __post_init__(self) -> None:
        # (0.5, 1] keeps sum gamma = inf and sum gamma^2 < inf
        if not 0.5 < self.exponent <= 1.0:
            raise ScheduleError(f"exponent must lie in (0.5, 1], got {self.exponent}")
        if self.offset < 0:
            raise ScheduleError(f"offset must be >= 0, got {self.offset}")
        for block, g0 in self.gamma0.items():
            if not g0 > 0:
                raise ScheduleError(f"gamma0 for block {block!r} must be positive, got {g0}")

    def vector(self, blocks: Sequence[str], n: int) -> np.ndarray:
        return np.array([step_size(self, block, n) for block in blocks])


def step_size(schedule: StepSchedule, block: str, n: int) -> float:
    if n < 1:
        raise ScheduleError(f"iteration index must be >= 1, got {n}")
    try:
        g0 = schedule.gamma0[block]
    except KeyError:
        raise ScheduleError(f"unknown parameter block {block!r}; known: {sorted(schedule.gamma0)}") from None
    return g0 * (schedule.offset + n) ** (-schedule.exponent)


@dataclass(frozen=True)
class Reparameterization:
    """Per-component ``identity`` or ``log`` transform to unconstrained space."""

    transforms: tuple[str, ...]

    def __post_init__(self) -> None:
        bad = [t for t in self.transforms if t not in ("identity", "log")]
        if bad:
            raise ValueError(f"unknown transforms {bad}")

    @classmethod
    def identity(cls, k: int) -> "Reparameterization":
        return cls(("identity",) * k)

    @property
    def _log_mask(self) -> np.ndarray:
        return np.array([t == "log" for t in self.transforms])

    def forward(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        mask = self._log_mask
        if np.any(xi[mask] <= 0):
            raise ValueError(f"log-transformed components must be positive, got {xi[mask]}")
        out = xi.copy()
        out[mask] = np.log(xi[mask])
        return out

    def inverse(self, xi_tilde) -> np.ndarray:
        out = np.asarray(xi_tilde, dtype=float).copy()
        mask = self._log_mask
        out[mask] = np.exp(out[mask])
        return out

    def jacobian(self, xi) -> np.ndarray:
        """Diagonal of ``d xi / d xi~`` evaluated at ``xi``."""
        xi = np.asarray(xi, dtype=float)
        return np.where(self._log_mask, xi, 1.0)


@dataclass(frozen=True)
class MsaStep:
    n: int
    xi: np.ndarray
    xi_tilde: np.ndarray
    gamma: np.ndarray
    gradient: np.ndarray | None = None
    objective: float | None = None
    levels: tuple[int, ...] = ()
    inner_samples: int = 0
    clipped: bool = False
    z_summary: str = ""


@dataclass
class MsaTrajectory:
    steps: list[MsaStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def xi(self) -> np.ndarray:
        return np.array([step.xi for step in self.steps])

    @property
    def objective(self) -> np.ndarray:
        return np.array([np.nan if s.objective is None else s.objective for s in self.steps[1:]])


def msa_run(
    model: CsoModel,
    xi0,
    z0: Any,
    schedule: StepSchedule,
    reparam: Reparameterization,
    dist: LevelDistribution,
    S: int,
    iterations: int,
    rng: np.random.Generator,
    blocks: Sequence[str] | None = None,
    weighting_mode: str = "normalized",
    sign: float = 1.0,
    clip: float = 1e6,
    outer_steps_per_update: int = 1,
    level_cap: int | None = None,
    summarize_z=repr,
) -> MsaTrajectory:
    """Run ``iterations`` updates from ``(xi0, z0)``; ``sign=-1`` minimizes."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if S < 1:
        raise ValueError(f"S must be >= 1, got {S}")
    xi = np.asarray(xi0, dtype=float).copy()
    k = xi.size
    if len(reparam.transforms) != k:
        raise ValueError(f"reparameterization covers {len(reparam.transforms)} components, xi has {k}")
    blocks = tuple(blocks) if blocks is not None else (DEFAULT_BLOCK,) * k
    if len(blocks) != k:
        raise ValueError(f"{len(blocks)} block labels for {k} components")
    for block in set(blocks):
        step_size(schedule, block, 1)

    xi_tilde = reparam.forward(xi)
    z = z0
    traj = MsaTrajectory([MsaStep(0, xi.copy(), xi_tilde.copy(), np.zeros(k), z_summary=summarize_z(z))])
    for n, child in enumerate(rng.spawn(iterations), start=1):
        outer_rng, est_rng = child.spawn(2)
        for _ in range(outer_steps_per_update):
            z = model.outer_step(z, outer_rng)
        estimates = estimate_H_batch(model, z, xi, dist, S, est_rng, weighting_mode, level_cap)
        h = np.mean([est.value for est in estimates], axis=0)
        grad_tilde = h * reparam.jacobian(xi)
        clipped = bool(np.any(np.abs(grad_tilde) > clip))
        if clipped:
            log.info("iteration %d: gradient %s clipped to +/-%g", n, grad_tilde, clip)
            grad_tilde = np.clip(grad_tilde, -clip, clip)
        gamma = schedule.vector(blocks, n)
        with np.errstate(over="ignore"):  # overflow is reported as MsaDivergence below
            xi_tilde = xi_tilde + sign * gamma * grad_tilde
            xi = reparam.inverse(xi_tilde)
        objective = float(np.mean([np.sum(est.combined_g) for est in estimates]))
        traj.steps.append(
            MsaStep(
                n=n,
                xi=xi.copy(),
                xi_tilde=xi_tilde.copy(),
                gamma=gamma,
                gradient=h,
                objective=objective,
                levels=tuple(est.level for est in estimates),
                inner_samples=sum(est.inner_samples_used for est in estimates),
                clipped=clipped,
                z_summary=summarize_z(z),
            )
        )
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(xi_tilde))):
            raise MsaDivergence(f"non-finite iterate at step {n}: {xi}", traj)
    return traj


def estimate_parameter_mse(runs: Sequence[MsaTrajectory], reference) -> np.ndarray:
    """Per-iteration, per-component relative MSE across independent runs.

    Components whose reference value is zero fall back to absolute MSE.
    """
    if not runs:
        raise ValueError("need at least one run")
    lengths = {len(run) for run in runs}
    if len(lengths) != 1:
        raise ValueError(f"runs have different lengths: {sorted(lengths)}")
    reference = np.asarray(reference, dtype=float)
    if not np.all(np.isfinite(reference)):
        raise ValueError("reference must be finite")
    iterates = np.stack([run.xi for run in runs])  # (C, n + 1, k)
    scale = np.where(reference == 0.0, 1.0, reference)
    if np.any(reference == 0.0):
        log.warning("reference components %s are zero; using absolute MSE there", np.flatnonzero(reference == 0.0))
    return np.mean(((iterates - reference) / scale) ** 2, axis=0)
