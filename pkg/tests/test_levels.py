import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unbiased_cso.levels import (
    LevelDistribution,
    LevelDomainError,
    level_pmf,
    sample_count,
    sample_level,
)


def test_sample_count_schedule():
    assert [sample_count(l) for l in range(5)] == [0, 2, 4, 8, 16]
    with pytest.raises(LevelDomainError):
        sample_count(-1)


def test_geometric_beta_one_values():
    d = LevelDistribution.geometric(1.0)
    assert level_pmf(d, 1) == 0.5
    assert level_pmf(d, 2) == 0.25


@pytest.mark.parametrize("beta", [0.3, 0.6, 0.9, 1.0])
def test_geometric_pmf_matches_closed_form(beta):
    d = LevelDistribution.geometric(beta)
    for l in (1, 2, 7):
        assert level_pmf(d, l) == pytest.approx((2**beta - 1) * 2 ** (-beta * l), rel=1e-14)
    # cached pmf plus analytic tail is a probability vector
    assert abs(d.pmf.sum() - 1.0) < 1e-12


def test_truncated_log_normalization():
    d = LevelDistribution.truncated_log(q=4, l_max=10)
    raw = np.array([(l + 4) * math.log(l + 4) ** 2 * 2.0**-l for l in range(1, 11)])
    np.testing.assert_allclose(d.pmf, raw / raw.sum(), rtol=1e-14)
    assert abs(sum(level_pmf(d, l) for l in range(1, 11)) - 1.0) < 1e-12
    assert np.all(d.pmf > 0)


@pytest.mark.parametrize("dist", [LevelDistribution.geometric(0.5), LevelDistribution.truncated_log(4, 10), LevelDistribution.point(3)])
def test_level_zero_is_outside_support(dist):
    with pytest.raises(LevelDomainError):
        level_pmf(dist, 0)


def test_truncated_log_beyond_lmax_rejected():
    with pytest.raises(LevelDomainError):
        level_pmf(LevelDistribution.truncated_log(4, 10), 11)


@pytest.mark.parametrize("kwargs", [dict(kind="geometric", beta=0.0), dict(kind="geometric", beta=1.5),
                                    dict(kind="truncated-log", q=0, l_max=3), dict(kind="truncated-log", q=4, l_max=0),
                                    dict(kind="point", level=0), dict(kind="bogus")])
def test_invalid_distributions(kwargs):
    with pytest.raises(ValueError):
        LevelDistribution(**kwargs)


def test_truncated_draws_stay_in_support(rng):
    d = LevelDistribution.truncated_log(4, 10)
    draws = [sample_level(d, rng) for _ in range(20000)]
    assert min(draws) >= 1 and max(draws) <= 10


def test_point_mass_always_returns_level(rng):
    d = LevelDistribution.point(3)
    assert {sample_level(d, rng) for _ in range(100)} == {3}


def test_geometric_frequency_of_level_one():
    rng = np.random.default_rng(0)
    d = LevelDistribution.geometric(1.0)
    n = 10**6
    # vectorized equivalent of repeated sample_level calls
    u = rng.random(n)
    levels = np.maximum(1, np.ceil(-np.log2(1.0 - u) / d.beta))
    freq = np.mean(levels == 1)
    assert abs(freq - 0.5) < 3 * math.sqrt(0.25 / n)


def test_sample_level_frequencies_match_pmf():
    rng = np.random.default_rng(1)
    d = LevelDistribution.truncated_log(4, 6)
    n = 40000
    counts = np.bincount([sample_level(d, rng) for _ in range(n)], minlength=7)[1:]
    se = np.sqrt(d.pmf * (1 - d.pmf) / n)
    assert np.all(np.abs(counts / n - d.pmf) < 4 * se)


@settings(max_examples=50, deadline=None)
@given(beta=st.floats(0.05, 1.0), seed=st.integers(0, 2**32 - 1))
def test_geometric_draws_are_positive_integers(beta, seed):
    rng = np.random.default_rng(seed)
    level = sample_level(LevelDistribution.geometric(beta), rng)
    assert isinstance(level, int) and level >= 1


@settings(max_examples=40, deadline=None)
@given(q=st.integers(1, 20), l_max=st.integers(1, 15))
def test_truncated_log_pmf_is_normalized(q, l_max):
    d = LevelDistribution.truncated_log(q, l_max)
    assert abs(d.pmf.sum() - 1.0) < 1e-12
    assert d.max_level == l_max


def test_to_dict_round_trip():
    d = LevelDistribution.truncated_log(4, 10)
    assert LevelDistribution(**d.to_dict()) == d
