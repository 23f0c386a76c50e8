"""Probability laws over multilevel truncation levels.

Levels are indexed from 1 and level ``l`` uses ``N_l = 2**l`` inner samples.
Three kinds are supported:

* ``geometric``: ``P(l) = (2**beta - 1) * 2**(-beta * l)`` on ``{1, 2, ...}``,
  sampled exactly through the closed-form inverse CDF.
* ``truncated-log``: ``P(l) ∝ (l + q) * log(l + q)**2 / 2**l`` on
  ``{1, ..., l_max}``.
* ``point``: all mass on a single level (useful for testing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TAIL_CUTOFF = 1e-15


class LevelDomainError(ValueError):
    """Raised when a level lies outside a distribution's support."""


def sample_count(level: int) -> int:
    """Inner-sample schedule ``N_l = 2**l`` (with ``N_0 = 0``)."""
    if level < 0:
        raise LevelDomainError(f"level must be >= 0, got {level}")
    return 0 if level == 0 else 2**level


@dataclass(frozen=True)
class LevelDistribution:
    kind: str
    beta: float | None = None
    q: int | None = None
    l_max: int | None = None
    level: int | None = None
    pmf: np.ndarray = field(init=False, repr=False, compare=False)
    cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind == "geometric":
            if self.beta is None or not 0.0 < self.beta <= 1.0:
                raise ValueError(f"geometric law needs beta in (0, 1], got {self.beta}")
            # cache until the remaining tail mass 2**(-beta*l) drops below the cutoff
            n_cached = int(math.ceil(-math.log2(TAIL_CUTOFF) / self.beta))
            levels = np.arange(1, n_cached + 1, dtype=float)
            pmf = (2.0**self.beta - 1.0) * 2.0 ** (-self.beta * levels)
        elif self.kind == "truncated-log":
            if self.q is None or self.q < 1:
                raise ValueError(f"truncated-log law needs integer q >= 1, got {self.q}")
            if self.l_max is None or self.l_max < 1:
                raise ValueError(f"truncated-log law needs l_max >= 1, got {self.l_max}")
            levels = np.arange(1, self.l_max + 1, dtype=float)
            shifted = levels + self.q
            weights = shifted * np.log(shifted) ** 2 * 2.0 ** (-levels)
            pmf = weights / weights.sum()
        elif self.kind == "point":
            if self.level is None or self.level < 1:
                raise ValueError(f"point law needs level >= 1, got {self.level}")
            pmf = np.zeros(self.level)
            pmf[-1] = 1.0
        else:
            raise ValueError(f"unknown level distribution kind {self.kind!r}")
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "cdf", np.cumsum(pmf))

    @classmethod
    def geometric(cls, beta: float) -> "LevelDistribution":
        return cls("geometric", beta=beta)

    @classmethod
    def truncated_log(cls, q: int = 4, l_max: int = 10) -> "LevelDistribution":
        return cls("truncated-log", q=q, l_max=l_max)

    @classmethod
    def point(cls, level: int) -> "LevelDistribution":
        return cls("point", level=level)

    @property
    def max_level(self) -> int | None:
        """Largest level with positive mass, ``None`` for unbounded support."""
        if self.kind == "geometric":
            return None
        return len(self.pmf)

    def support(self) -> range:
        """Finite support; for the geometric law, the cached prefix."""
        if self.kind == "point":
            return range(self.level, self.level + 1)
        return range(1, len(self.pmf) + 1)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for key in ("beta", "q", "l_max", "level"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


def level_pmf(dist: LevelDistribution, level: int) -> float:
    """Normalized probability of drawing ``level``."""
    if dist.kind == "geometric":
        if level < 1:
            raise LevelDomainError(f"level {level} outside support {{1, 2, ...}}")
        return (2.0**dist.beta - 1.0) * 2.0 ** (-dist.beta * level)
    if level not in dist.support():
        raise LevelDomainError(
            f"level {level} outside support [{dist.support().start}, {dist.support().stop - 1}]"
        )
    return float(dist.pmf[level - 1])


def sample_level(dist: LevelDistribution, rng: np.random.Generator) -> int:
    """Draw a level by inversion of the cumulative distribution."""
    if dist.kind == "point":
        return dist.level
    u = rng.random()
    if dist.kind == "geometric":
        # P(L > l) = 2**(-beta*l); 1 - u lies in (0, 1]
        return max(1, int(math.ceil(-math.log2(1.0 - u) / dist.beta)))
    idx = int(np.searchsorted(dist.cdf, u, side="right"))
    return min(idx, len(dist.pmf) - 1) + 1
