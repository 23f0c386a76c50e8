"""Backtest summary statistics for a sequence of per-period portfolio returns."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

PERIODS_PER_YEAR = 252


@dataclass(frozen=True)
class BacktestMetrics:
    final_wealth: float
    pct_gain: float
    pct_loss: float
    max_drawdown: float
    pct_winning: float
    ann_return: float
    ann_volatility: float
    sharpe: float
    sharpe_defined: bool

    def to_dict(self) -> dict:
        return asdict(self)


def wealth_path(returns) -> np.ndarray:
    """Wealth including the initial unit, length ``n + 1``."""
    return np.concatenate([[1.0], np.cumprod(1.0 + np.asarray(returns, dtype=float))])


def backtest_metrics(returns, periods_per_year: int = PERIODS_PER_YEAR) -> BacktestMetrics:
    """Percent-valued summary of a return series.

    Average gain/loss are means over the positive/negative periods (0 when
    there are none). Volatility uses the ``ddof=1`` standard deviation. A
    flat series has no Sharpe ratio: it is reported as NaN with
    ``sharpe_defined=False``.
    """
    r = np.asarray(returns, dtype=float).reshape(-1)
    if r.size < 2:
        raise ValueError(f"need at least 2 periods, got {r.size}")
    if not np.all(np.isfinite(r)) or np.any(r <= -1):
        raise ValueError("returns must be finite and greater than -1")
    wealth = wealth_path(r)
    peaks = np.maximum.accumulate(wealth)
    mdd = float(np.max((peaks - wealth) / peaks)) * 100
    gains, losses = r[r > 0], r[r < 0]
    ann_r = float(np.mean(r)) * periods_per_year * 100
    ann_v = float(np.std(r, ddof=1)) * math.sqrt(periods_per_year) * 100
    defined = ann_v > 0
    return BacktestMetrics(
        final_wealth=float(wealth[-1]),
        pct_gain=float(gains.mean()) * 100 if gains.size else 0.0,
        pct_loss=float(losses.mean()) * 100 if losses.size else 0.0,
        max_drawdown=mdd,
        pct_winning=float(np.mean(r > 0)) * 100,
        ann_return=ann_r,
        ann_volatility=ann_v,
        sharpe=ann_r / ann_v if defined else math.nan,
        sharpe_defined=defined,
    )


def portfolio_returns(asset_returns, weights) -> np.ndarray:
    """Per-period returns of a buy-and-rebalance portfolio with fixed weights."""
    return np.asarray(asset_returns, dtype=float) @ np.asarray(weights, dtype=float)
