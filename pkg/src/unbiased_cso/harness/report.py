"""Bias / variance / MSE decomposition of replicated estimates."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MseRow:
    component: int
    S: int
    replicates: int
    mean: float
    reference: float
    bias: float
    bias2: float
    variance: float
    mse: float
    rel_bias2: float
    rel_variance: float
    rel_mse: float
    bias_se: float
    mse_se: float
    relative: bool
    seconds: float = 0.0


@dataclass
class MseReport:
    rows: list[MseRow] = field(default_factory=list)

    HEADER = tuple(f.name for f in fields(MseRow))

    def table(self) -> list[dict]:
        return [asdict(r) for r in self.rows]

    def column(self, name: str, component: int) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows if r.component == component])

    def S_values(self, component: int = 0) -> np.ndarray:
        return self.column("S", component)


def decompose_mse(estimates, reference, S: int = 1, seconds: float = 0.0) -> list[MseRow]:
    """One row per component for a ``(replicates, k)`` array of estimates.

    ``variance`` is the unbiased (``ddof=1``) sample variance and
    ``mse = bias^2 + variance`` by definition; relative quantities divide by
    ``reference^2``. A zero reference component switches that component to
    absolute values (``relative=False``) and logs a notice.
    """
    est = np.asarray(estimates, dtype=float)
    if est.ndim == 1:
        est = est[:, None]
    reference = np.atleast_1d(np.asarray(reference, dtype=float))
    n, k = est.shape
    if n < 2:
        raise ValueError(f"need at least 2 replicates, got {n}")
    if reference.shape != (k,) or not np.all(np.isfinite(reference)):
        raise ValueError(f"reference must be a finite {k}-vector, got {reference}")
    mean = est.mean(axis=0)
    var = est.var(axis=0, ddof=1)
    sq_err = (est - reference) ** 2
    mse_se = sq_err.std(axis=0, ddof=1) / math.sqrt(n)
    rows = []
    for c in range(k):
        ref = float(reference[c])
        relative = ref != 0.0
        if not relative:
            log.warning("component %d has a zero reference; reporting absolute quantities", c)
        scale = ref * ref if relative else 1.0
        bias = float(mean[c] - ref)
        rows.append(
            MseRow(
                component=c,
                S=int(S),
                replicates=n,
                mean=float(mean[c]),
                reference=ref,
                bias=bias,
                bias2=bias * bias,
                variance=float(var[c]),
                mse=bias * bias + float(var[c]),
                rel_bias2=bias * bias / scale,
                rel_variance=float(var[c]) / scale,
                rel_mse=(bias * bias + float(var[c])) / scale,
                bias_se=float(math.sqrt(var[c] / n)),
                mse_se=float(mse_se[c]) / scale,
                relative=relative,
                seconds=float(seconds),
            )
        )
    return rows


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` on ``log x``."""
    x, y = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
