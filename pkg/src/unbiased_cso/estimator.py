"""Randomized multilevel estimator of the conditional-gradient term.

For an outer state ``z`` and parameter ``xi`` the target is

    H(z, xi) = E[grad_g(z, X, xi) | z]^T  grad_f(z, E[g(z, X, xi) | z])

where the inner conditional law of ``X`` is only reachable through an MCMC
kernel. Inner expectations are replaced by averages of independent chain
segments of lengths ``N_p - N_{p-1}`` (``N_p = 2**p``); a random level ``L``
is drawn and the difference between the level-``L`` and level-``(L-1)``
plug-in terms is reweighted by ``1 / P(L)``.

Shapes follow a ``(d, k)`` convention: ``g`` returns a ``d``-vector, its
Jacobian in ``xi`` is ``d x k`` and ``grad_f`` returns a ``d``-vector, so the
assembled term is a ``k``-vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence, runtime_checkable

import numpy as np

from .levels import LevelDistribution, level_pmf, sample_count, sample_level
from .rng import stream_id

WEIGHTING_MODES = ("normalized", "paper-literal")


class ModelEvaluationError(RuntimeError):
    """A model callback failed while running an inner chain."""


class NumericError(FloatingPointError):
    """A non-finite value appeared where a finite one is required."""


class ScheduleMismatchError(ValueError):
    """Segment sample counts do not follow the ``N_l = 2**l`` schedule."""


@runtime_checkable
class CsoModel(Protocol):
    """A conditional stochastic optimization problem.

    Kernels receive ``xi`` because in several bundled models the inner
    target depends on the parameter being optimized. Implementations must be
    deterministic given their inputs and the generator they are handed.
    """

    def eval_g(self, z: Any, x: Any, xi: np.ndarray) -> np.ndarray: ...

    def eval_grad_g(self, z: Any, x: Any, xi: np.ndarray) -> np.ndarray: ...

    def eval_grad_f(self, z: Any, u: np.ndarray) -> np.ndarray: ...

    def sample_initial(self, z: Any, xi: np.ndarray, rng: np.random.Generator) -> Any: ...

    def inner_step(self, z: Any, x: Any, xi: np.ndarray, rng: np.random.Generator) -> Any: ...

    def outer_step(self, z: Any, rng: np.random.Generator) -> Any: ...


@dataclass(frozen=True)
class SegmentAverage:
    mean_g: np.ndarray
    mean_grad_g: np.ndarray
    sample_count: int


@dataclass(frozen=True)
class CombinedAverage:
    segments: tuple[SegmentAverage, ...]
    weighting_mode: str
    weights: tuple[float, ...]
    combined_g: np.ndarray
    combined_grad_g: np.ndarray


@dataclass(frozen=True)
class GradientEstimate:
    value: np.ndarray
    level: int
    inner_samples_used: int
    rng_stream_id: tuple
    combined_g: np.ndarray = field(repr=False)
    truncated: bool = False


def as_parameter_vector(xi: Sequence[float] | np.ndarray) -> np.ndarray:
    values = np.array(xi, dtype=float).reshape(-1)
    if not np.all(np.isfinite(values)):
        raise NumericError(f"parameter vector has non-finite entries: {values}")
    return values


def segment_from_states(model: CsoModel, z: Any, states: Sequence[Any], xi: np.ndarray) -> SegmentAverage:
    """Average ``g`` and its Jacobian over an already simulated path.

    Models may provide ``eval_path(z, states, xi) -> (g_rows, jacobians)`` to
    evaluate a whole path at once; otherwise states are evaluated one by one.
    """
    eval_path = getattr(model, "eval_path", None)
    if eval_path is not None:
        try:
            gs, grads = eval_path(z, states, xi)
        except Exception as exc:
            raise ModelEvaluationError(f"path evaluation failed for z={z!r}: {exc}") from exc
        n = len(states)
        return SegmentAverage(mean_g=gs.sum(axis=0) / n, mean_grad_g=grads.sum(axis=0) / n, sample_count=n)
    gs = []
    grads = []
    for step, x in enumerate(states):
        try:
            gs.append(np.atleast_1d(np.asarray(model.eval_g(z, x, xi), dtype=float)))
            grads.append(np.atleast_2d(np.asarray(model.eval_grad_g(z, x, xi), dtype=float)))
        except Exception as exc:
            raise ModelEvaluationError(f"model evaluation failed at step {step} for z={z!r}: {exc}") from exc
    return SegmentAverage(
        mean_g=np.mean(gs, axis=0),
        mean_grad_g=np.mean(grads, axis=0),
        sample_count=len(states),
    )


def run_mc_segment(
    model: CsoModel, z: Any, xi: np.ndarray, n_transitions: int, rng: np.random.Generator
) -> SegmentAverage:
    """Run one inner chain of ``n_transitions`` moves from a fresh initial draw.

    A model exposing ``sample_segment(z, xi, n_transitions, rng)`` simulates
    the whole chain (all ``n_transitions + 1`` states) in one call.
    """
    if n_transitions < 1:
        raise ValueError(f"n_transitions must be >= 1, got {n_transitions}")
    sample_segment = getattr(model, "sample_segment", None)
    if sample_segment is not None:
        try:
            states = sample_segment(z, xi, n_transitions, rng)
        except Exception as exc:
            raise ModelEvaluationError(f"segment simulation failed for z={z!r}: {exc}") from exc
        return segment_from_states(model, z, states, xi)
    try:
        x = model.sample_initial(z, xi, rng)
    except Exception as exc:
        raise ModelEvaluationError(f"initial draw failed for z={z!r}: {exc}") from exc
    states = [x]
    for step in range(1, n_transitions + 1):
        try:
            x = model.inner_step(z, x, xi, rng)
        except Exception as exc:
            raise ModelEvaluationError(f"inner transition {step} failed for z={z!r}: {exc}") from exc
        states.append(x)
    return segment_from_states(model, z, states, xi)


def combine_segments(segments: Sequence[SegmentAverage], weighting_mode: str = "normalized") -> CombinedAverage:
    """Weighted combination of segment averages at level ``len(segments)``.

    A single segment is returned as-is in both modes: level one is the plain
    ``N_1``-transition average.
    """
    if weighting_mode not in WEIGHTING_MODES:
        raise ValueError(f"unknown weighting mode {weighting_mode!r}")
    if not segments:
        raise ValueError("need at least one segment")
    level = len(segments)
    counts = [seg.sample_count for seg in segments]
    for p, seg in enumerate(segments, start=1):
        expected = sample_count(p) - sample_count(p - 1) + 1
        if seg.sample_count != expected:
            raise ScheduleMismatchError(
                f"segment {p} has {seg.sample_count} points, schedule requires {expected}"
            )
    if level == 1:
        weights = [1.0]
    elif weighting_mode == "normalized":
        weights = [c / sum(counts) for c in counts]
    else:
        weights = [c / sample_count(level) for c in counts]
    combined_g = weights[0] * segments[0].mean_g
    combined_grad_g = weights[0] * segments[0].mean_grad_g
    for w, seg in zip(weights[1:], segments[1:]):
        combined_g = combined_g + w * seg.mean_g
        combined_grad_g = combined_grad_g + w * seg.mean_grad_g
    return CombinedAverage(
        segments=tuple(segments),
        weighting_mode=weighting_mode,
        weights=tuple(weights),
        combined_g=combined_g,
        combined_grad_g=combined_grad_g,
    )


def assemble_term(model: CsoModel, z: Any, xi: np.ndarray, combined: CombinedAverage) -> np.ndarray:
    """Plug-in term ``combined_grad_g^T grad_f(z, combined_g)``."""
    grad_f = np.atleast_1d(np.asarray(model.eval_grad_f(z, combined.combined_g), dtype=float))
    if not np.all(np.isfinite(grad_f)):
        raise NumericError(f"grad_f non-finite at z={z!r}, u={combined.combined_g}: {grad_f}")
    return combined.combined_grad_g.T @ grad_f


def estimate_H(
    model: CsoModel,
    z: Any,
    xi: np.ndarray,
    dist: LevelDistribution,
    weighting_mode: str = "normalized",
    rng: np.random.Generator | None = None,
    level_cap: int | None = None,
) -> GradientEstimate:
    """Single-term randomized multilevel estimate of ``H(z, xi)``.

    ``level_cap`` bounds the work for unbounded level laws: draws above the
    cap are evaluated at the cap with the lumped tail probability and the
    estimate is flagged ``truncated``.
    """
    if rng is None:
        raise ValueError("an explicit generator is required")
    level = sample_level(dist, rng)
    truncated = False
    prob = level_pmf(dist, level)
    if level_cap is not None and level >= level_cap:
        truncated = level > level_cap
        level = level_cap
        prob = _tail_mass(dist, level_cap)

    segments = [
        run_mc_segment(model, z, xi, sample_count(p) - sample_count(p - 1), rng) for p in range(1, level + 1)
    ]
    value, top = single_term_value(model, z, xi, segments, prob, weighting_mode)
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite estimate at level {level}: {value}")
    return GradientEstimate(
        value=value,
        level=level,
        inner_samples_used=sample_count(level) + level,
        rng_stream_id=stream_id(rng),
        combined_g=top.combined_g,
        truncated=truncated,
    )


def single_term_value(
    model: CsoModel,
    z: Any,
    xi: np.ndarray,
    segments: Sequence[SegmentAverage],
    prob: float,
    weighting_mode: str = "normalized",
) -> tuple[np.ndarray, CombinedAverage]:
    """Reweighted level difference for given segments; also returns the top combination."""
    top = combine_segments(segments, weighting_mode)
    value = assemble_term(model, z, xi, top)
    if len(segments) > 1:
        value = value - assemble_term(model, z, xi, combine_segments(segments[:-1], weighting_mode))
    return value / prob, top


def _tail_mass(dist: LevelDistribution, level: int) -> float:
    if dist.kind == "geometric":
        return 2.0 ** (-dist.beta * (level - 1))
    return float(dist.pmf[level - 1 :].sum())


def estimate_H_batch(
    model: CsoModel,
    z: Any,
    xi: np.ndarray,
    dist: LevelDistribution,
    n_estimates: int,
    rng: np.random.Generator,
    weighting_mode: str = "normalized",
    level_cap: int | None = None,
) -> list[GradientEstimate]:
    """``n_estimates`` independent estimates, each on its own child stream."""
    if n_estimates < 1:
        raise ValueError(f"need at least one estimate, got {n_estimates}")
    return [
        estimate_H(model, z, xi, dist, weighting_mode, child, level_cap=level_cap)
        for child in rng.spawn(n_estimates)
    ]


def estimate_H_averaged(
    model: CsoModel,
    z: Any,
    xi: np.ndarray,
    dist: LevelDistribution,
    S: int,
    rng: np.random.Generator,
    weighting_mode: str = "normalized",
) -> np.ndarray:
    """Mean of ``S`` independent single-term estimates."""
    estimates = estimate_H_batch(model, z, xi, dist, S, rng, weighting_mode)
    return np.mean([est.value for est in estimates], axis=0)


def composite_ladder(
    model: CsoModel,
    z: Any,
    xi: np.ndarray,
    max_level: int,
    rng: np.random.Generator,
    weighting_mode: str = "normalized",
) -> np.ndarray:
    """Plug-in terms at levels ``1..max_level`` built on shared segments.

    Row ``l - 1`` is the level-``l`` term; consecutive rows are coupled the
    same way as the two terms inside a single-term estimate.
    """
    segments = [
        run_mc_segment(model, z, xi, sample_count(p) - sample_count(p - 1), rng) for p in range(1, max_level + 1)
    ]
    return np.array(
        [assemble_term(model, z, xi, combine_segments(segments[:lvl], weighting_mode)) for lvl in range(1, max_level + 1)]
    )
