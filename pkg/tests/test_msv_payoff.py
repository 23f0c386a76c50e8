import numpy as np
import pytest

from conftest import central_difference, rel_err
from unbiased_cso.msv import PayoffConfig, grad_payoff_wrt_logits, grad_payoff_wrt_weights, payoff_g, softmax_jacobian, softmax_weights


def test_hand_computed_instance():
    R = np.array([[0.1, -0.05]])
    mu = np.array([[0.02, 0.01]])
    # w'R = 0.04, w'(R - mu) = 0.024, penalty = 10 * 0.024^2
    assert payoff_g(R, mu, [0.6, 0.4], 20.0) == pytest.approx(0.04 - 10 * 0.024**2, rel=1e-14)


def test_zero_aversion_is_mean_portfolio_return():
    rng = np.random.default_rng(0)
    R, mu, w = rng.normal(size=(5, 3)), rng.normal(size=(5, 3)), softmax_weights(rng.normal(size=3))
    assert payoff_g(R, mu, w, 0.0) == pytest.approx(float(np.mean(R @ w)))


def test_penalty_vanishes_at_predictive_mean():
    R = np.random.default_rng(1).normal(size=(4, 3))
    w = np.array([0.2, 0.3, 0.5])
    assert payoff_g(R, R, w, 50.0) == pytest.approx(float(np.mean(R @ w)))


def test_independent_means_product_form():
    rng = np.random.default_rng(2)
    R, mu, mu_b = rng.normal(size=(3, 2, 4))
    w = softmax_weights(rng.normal(size=4))
    expected = np.mean(R @ w - 5.0 * ((R - mu) @ w) * ((R - mu_b) @ w))
    assert payoff_g(R, mu, w, 10.0, mu_b) == pytest.approx(expected)


def test_batch_axes():
    rng = np.random.default_rng(3)
    R = rng.normal(size=(6, 5, 3))
    mu = rng.normal(size=(5, 3))
    w = softmax_weights(rng.normal(size=3))
    np.testing.assert_allclose(payoff_g(R, mu, w, 2.0), [payoff_g(r, mu, w, 2.0) for r in R])


def test_linear_case_gradient():
    rng = np.random.default_rng(4)
    xi, R = rng.normal(size=3), rng.normal(size=(1, 3))
    np.testing.assert_allclose(grad_payoff_wrt_logits(R, R * 0, xi, 0.0), softmax_jacobian(xi).T @ R[0], rtol=1e-14)


def test_symmetric_instance_has_equal_components():
    R = np.full((2, 3), 0.05)
    mu = np.full((2, 3), 0.01)
    g = grad_payoff_wrt_logits(R, mu, np.zeros(3), 20.0)
    np.testing.assert_allclose(g, g[0], atol=1e-16)


def test_gradients_match_fd():
    rng = np.random.default_rng(5)
    worst_w = worst_xi = 0.0
    for _ in range(100):
        p, h = rng.integers(2, 8), rng.integers(1, 6)
        R, mu = rng.normal(0, 0.1, (h, p)), rng.normal(0, 0.1, (h, p))
        mu_b = rng.normal(0, 0.1, (h, p)) if rng.random() < 0.5 else None
        zeta = rng.uniform(0, 40)
        xi = rng.normal(size=p)
        w = softmax_weights(xi)
        fd_w = central_difference(lambda v: payoff_g(R, mu, v, zeta, mu_b), w)
        worst_w = max(worst_w, rel_err(grad_payoff_wrt_weights(R, mu, w, zeta, mu_b), fd_w, floor=1e-8))
        fd_xi = central_difference(lambda v: payoff_g(R, mu, softmax_weights(v), zeta, mu_b), xi)
        worst_xi = max(worst_xi, rel_err(grad_payoff_wrt_logits(R, mu, xi, zeta, mu_b), fd_xi, floor=1e-8))
    assert worst_w < 1e-6 and worst_xi < 1e-6


@pytest.mark.parametrize("kwargs", [dict(zeta=-1.0), dict(horizon=0), dict(predictive_batch=0), dict(history=0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        PayoffConfig(**kwargs)
