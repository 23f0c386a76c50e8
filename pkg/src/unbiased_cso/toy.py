"""A two-state discrete CSO instance whose estimator law can be enumerated.

``g(z, x, xi) = xi * table[z, x]`` and ``f(z, u) = u**2``, so with ``k = d = 1``

    H(z, xi) = 2 * xi * m(z)**2,   m(z) = sum_x pi(x) table[z, x]

where ``pi`` is the stationary law of the inner transition matrix. Because ``f``
is nonlinear, finite-sample plug-in terms are biased, which makes the
unbiasedness checks non-vacuous.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .estimator import SegmentAverage, segment_from_states, single_term_value
from .levels import LevelDistribution, level_pmf, sample_count

MAX_ENUMERATION_LEVEL = 3


@dataclass(frozen=True)
class DiscreteCso:
    transition: np.ndarray
    initial: np.ndarray
    g_table: np.ndarray

    def __post_init__(self) -> None:
        M = np.asarray(self.transition, dtype=float)
        eta = np.asarray(self.initial, dtype=float)
        table = np.atleast_2d(np.asarray(self.g_table, dtype=float))
        if M.shape != (2, 2) or eta.shape != (2,) or table.shape[1] != 2:
            raise ValueError("expected a 2x2 transition, a 2-vector initial law and an (n_z, 2) table")
        if np.any(M <= 0.0) or not np.allclose(M.sum(axis=1), 1.0, atol=1e-14, rtol=0):
            raise ValueError(f"transition must be row-stochastic with positive entries, got {M.tolist()}")
        if np.any(eta <= 0.0) or abs(eta.sum() - 1.0) > 1e-14:
            raise ValueError(f"initial law must be a positive probability vector, got {eta.tolist()}")
        object.__setattr__(self, "transition", M)
        object.__setattr__(self, "initial", eta)
        object.__setattr__(self, "g_table", table)

    @property
    def n_outer(self) -> int:
        return self.g_table.shape[0]

    @property
    def epsilon(self) -> float:
        """Doeblin minorization constant ``sum_x' min_x M(x, x')``."""
        return float(self.transition.min(axis=0).sum())

    def stationary(self) -> np.ndarray:
        m01 = self.transition[0, 1]
        m10 = self.transition[1, 0]
        return np.array([m10, m01]) / (m01 + m10)

    # CsoModel interface
    def eval_g(self, z, x, xi):
        return xi * self.g_table[z, x]

    def eval_grad_g(self, z, x, xi):
        return np.full((1, 1), self.g_table[z, x])

    def eval_path(self, z, states, xi):
        values = self.g_table[z, np.asarray(states)]
        return (xi[0] * values)[:, None], values[:, None, None]

    def eval_grad_f(self, z, u):
        return 2.0 * np.asarray(u, dtype=float)

    def sample_initial(self, z, xi, rng):
        return int(rng.random() >= self.initial[0])

    def inner_step(self, z, x, xi, rng):
        return int(rng.random() >= self.transition[x, 0])

    def sample_segment(self, z, xi, n_transitions, rng):
        u = rng.random(n_transitions + 1)
        states = np.empty(n_transitions + 1, dtype=int)
        states[0] = u[0] >= self.initial[0]
        stay0 = self.transition[:, 0]
        for step in range(1, n_transitions + 1):
            states[step] = u[step] >= stay0[states[step - 1]]
        return states

    def outer_step(self, z, rng):
        return int(rng.integers(self.n_outer))


def exact_H(instance: DiscreteCso, z: int, xi: float) -> float:
    mean_table = float(instance.stationary() @ instance.g_table[z])
    return 2.0 * float(xi) * mean_table**2


def _segment_paths(instance: DiscreteCso, n_transitions: int):
    """All state paths of one segment with their probabilities."""
    paths = np.array(list(itertools.product((0, 1), repeat=n_transitions + 1)), dtype=int)
    probs = instance.initial[paths[:, 0]].copy()
    for step in range(n_transitions):
        probs *= instance.transition[paths[:, step], paths[:, step + 1]]
    return paths, probs


def _check_level(level: int) -> None:
    if not 1 <= level <= MAX_ENUMERATION_LEVEL:
        raise ValueError(f"enumeration supports levels 1..{MAX_ENUMERATION_LEVEL}, got {level}")


def exhaustive_composite_mean(
    instance: DiscreteCso, z: int, xi: float, level: int, weighting_mode: str = "normalized"
) -> float:
    """Exact expectation of the level-``level`` plug-in term.

    Computed directly from path arrays, without the estimator code.
    """
    _check_level(level)
    table = instance.g_table[z]
    per_segment = []
    counts = []
    for p in range(1, level + 1):
        paths, probs = _segment_paths(instance, sample_count(p) - sample_count(p - 1))
        per_segment.append((table[paths].mean(axis=1), probs))
        counts.append(paths.shape[1])
    counts = np.array(counts, dtype=float)
    if level == 1:
        weights = np.ones(1)
    elif weighting_mode == "normalized":
        weights = counts / counts.sum()
    else:
        weights = counts / 2.0**level

    total = 0.0
    for combo in itertools.product(*(range(len(m)) for m, _ in per_segment)):
        prob = 1.0
        c = 0.0
        for w, (means, probs), idx in zip(weights, per_segment, combo):
            prob *= probs[idx]
            c += w * means[idx]
        total += prob * 2.0 * xi * c * c
    return total


def exhaustive_estimator_moments(
    instance: DiscreteCso,
    z: int,
    xi: float,
    dist: LevelDistribution,
    weighting_mode: str = "normalized",
) -> tuple[float, float]:
    """Exact mean and second moment of the single-term estimator.

    Every level in the (finite) support and every joint segment path is
    visited; the estimator value on each atom comes from the same code path
    that the Monte Carlo estimator uses.
    """
    top = dist.max_level
    if top is None:
        raise ValueError("exhaustive enumeration needs a finite level support")
    _check_level(top)
    xi_vec = np.array([float(xi)])
    segment_tables: list[list[tuple[SegmentAverage, float]]] = []
    for p in range(1, top + 1):
        paths, probs = _segment_paths(instance, sample_count(p) - sample_count(p - 1))
        segment_tables.append(
            [(segment_from_states(instance, z, list(path), xi_vec), prob) for path, prob in zip(paths, probs)]
        )

    mean = 0.0
    second = 0.0
    for level in dist.support():
        p_level = level_pmf(dist, level)
        for combo in itertools.product(*segment_tables[:level]):
            prob = float(np.prod([pr for _, pr in combo]))
            value, _ = single_term_value(instance, z, xi_vec, [seg for seg, _ in combo], p_level, weighting_mode)
            mean += p_level * prob * value[0]
            second += p_level * prob * value[0] ** 2
    return mean, second


def _simulate_segments(instance: DiscreteCso, n_transitions: int, n: int, rng) -> np.ndarray:
    """``n`` independent segment state paths as an ``(n, n_transitions + 1)`` array."""
    u = rng.random((n, n_transitions + 1))
    states = np.empty(u.shape, dtype=np.intp)
    states[:, 0] = u[:, 0] >= instance.initial[0]
    stay0 = instance.transition[:, 0]
    for step in range(1, n_transitions + 1):
        states[:, step] = u[:, step] >= stay0[states[:, step - 1]]
    return states


def sample_estimates(
    instance: DiscreteCso,
    z: int,
    xi: float,
    dist: LevelDistribution,
    n: int,
    rng: np.random.Generator,
    weighting_mode: str = "normalized",
) -> np.ndarray:
    """``n`` independent single-term estimates, simulated in bulk.

    Same law as repeated :func:`~unbiased_cso.estimator.estimate_H` calls on
    this instance (level counts are multinomial, which is the joint law of
    ``n`` i.i.d. level draws), written with array operations so that
    millions of draws take seconds. Finite level support only.
    """
    top = dist.max_level
    if top is None or top > 16:
        raise ValueError("bulk sampling needs a finite level support up to 16")
    table = instance.g_table[z]
    counts = rng.multinomial(n, dist.pmf)
    out = []
    for level, n_level in zip(range(1, top + 1), counts):
        if n_level == 0:
            continue
        means, sizes = [], []
        for p in range(1, level + 1):
            states = _simulate_segments(instance, sample_count(p) - sample_count(p - 1), int(n_level), rng)
            means.append(table[states].mean(axis=1))
            sizes.append(states.shape[1])

        def term(k):
            if k == 1:
                c = means[0]
            else:
                sz = np.array(sizes[:k], dtype=float)
                w = sz / sz.sum() if weighting_mode == "normalized" else sz / sample_count(k)
                c = sum(wi * m for wi, m in zip(w, means[:k]))
            return 2.0 * xi * c * c

        value = term(level) - (term(level - 1) if level > 1 else 0.0)
        out.append(value / dist.pmf[level - 1])
    return rng.permutation(np.concatenate(out))


def exhaustive_estimator_mean(
    instance: DiscreteCso,
    z: int,
    xi: float,
    dist: LevelDistribution,
    weighting_mode: str = "normalized",
) -> float:
    return exhaustive_estimator_moments(instance, z, xi, dist, weighting_mode)[0]


def default_instance() -> DiscreteCso:
    """Asymmetric instance used by the tests and the toy experiment."""
    return DiscreteCso(
        transition=np.array([[0.7, 0.3], [0.4, 0.6]]),
        initial=np.array([0.9, 0.1]),
        g_table=np.array([[1.0, -2.0], [0.5, 3.0]]),
    )
