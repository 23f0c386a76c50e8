import math

import numpy as np
import pytest

from unbiased_cso.msv import backtest_metrics, make_instance, portfolio_returns, wealth_path


def spreadsheet_metrics(returns, periods=252):
    """Row-by-row recomputation, the way one would lay it out in a spreadsheet."""
    wealth, peak, mdd = 1.0, 1.0, 0.0
    gains, losses, wins = [], [], 0
    for r in returns:
        wealth *= 1.0 + r
        peak = max(peak, wealth)
        mdd = max(mdd, (peak - wealth) / peak)
        if r > 0:
            gains.append(r)
            wins += 1
        elif r < 0:
            losses.append(r)
    n = len(returns)
    mean = sum(returns) / n
    sd = math.sqrt(sum((r - mean) ** 2 for r in returns) / (n - 1))
    ann_r, ann_v = mean * periods * 100, sd * math.sqrt(periods) * 100
    return {
        "final_wealth": wealth,
        "pct_gain": 100 * sum(gains) / len(gains) if gains else 0.0,
        "pct_loss": 100 * sum(losses) / len(losses) if losses else 0.0,
        "max_drawdown": 100 * mdd,
        "pct_winning": 100 * wins / n,
        "ann_return": ann_r,
        "ann_volatility": ann_v,
        "sharpe": ann_r / ann_v,
    }


def test_flat_path():
    m = backtest_metrics([0.0, 0.0, 0.0])
    assert m.final_wealth == 1.0 and m.max_drawdown == 0.0 and m.pct_winning == 0.0
    assert math.isnan(m.sharpe) and not m.sharpe_defined


def test_up_then_down():
    m = backtest_metrics([0.10, -0.10])
    assert m.final_wealth == pytest.approx(0.99, rel=1e-14)
    assert m.max_drawdown == pytest.approx(10.0, rel=1e-12)
    assert m.pct_gain == pytest.approx(10.0) and m.pct_loss == pytest.approx(-10.0)


def test_uniform_portfolio_against_spreadsheet_oracle():
    inst = make_instance(6, 2, 10, 1, seed=3, holdout=250)
    r = portfolio_returns(inst.holdout_returns, np.full(6, 1 / 6))
    got = backtest_metrics(r).to_dict()
    for key, value in spreadsheet_metrics(list(map(float, r))).items():
        assert got[key] == pytest.approx(value, rel=1e-10, abs=1e-12), key


def test_wealth_path_starts_at_one():
    np.testing.assert_allclose(wealth_path([0.5, -0.5]), [1.0, 1.5, 0.75])


@pytest.mark.parametrize("bad", [[0.1], [0.1, -1.0], [0.1, np.nan]])
def test_invalid_series(bad):
    with pytest.raises(ValueError):
        backtest_metrics(bad)
