import numpy as np
import pytest

from unbiased_cso.msv import (
    LatentPath,
    MsvDomainError,
    MsvParams,
    conditional_return_mean,
    predictive_mean,
    simulate_latents,
    simulate_returns,
)
from unbiased_cso.msv.model import ar_log_terms, factor_log_terms, obs_log_terms
from unbiased_cso.msv.structure import covariance, n_pairs


def params(p=3, K=2, phi=0.9, sig=0.2, B=None, V=None, rng=None):
    rng = rng or np.random.default_rng(0)
    J = n_pairs(K)
    return MsvParams(
        B=rng.normal(size=(p, K)) if B is None else B,
        V=np.full(p, 0.01) if V is None else V,
        phi_x=np.full(K, phi), x0=rng.normal(-1, 0.3, K), sig_x=np.full(K, sig),
        phi_psi=np.full(J, phi), psi0=rng.normal(0, 0.3, J), sig_psi=np.full(J, sig),
    )


def test_domain_checks():
    with pytest.raises(MsvDomainError):
        params(V=np.array([0.1, -0.1, 0.1]))
    with pytest.raises(MsvDomainError):
        params(phi=1.0)
    with pytest.raises(MsvDomainError):
        params(sig=-0.1)
    with pytest.raises(MsvDomainError):
        MsvParams(np.ones((2, 2)), np.ones(3), 0.5, 0.0, 0.1, 0.5, 0.0, 0.1)


def test_theta_tilde_round_trip():
    pr = params()
    tx, tp = pr.theta_tilde()
    back = pr.with_theta_tilde(tx, tp)
    for name in ("phi_x", "x0", "sig_x", "phi_psi", "psi0", "sig_psi"):
        np.testing.assert_allclose(getattr(back, name), getattr(pr, name), rtol=1e-14)
    again = MsvParams.from_dicts(pr.theta_dict(), pr.chi_dict())
    np.testing.assert_array_equal(again.B, pr.B)


def test_zero_noise_paths_are_constant():
    pr = params(sig=0.0)
    lat = simulate_latents(pr, 50, np.random.default_rng(1))
    np.testing.assert_array_equal(lat.X, np.broadcast_to(pr.x0, lat.X.shape))
    np.testing.assert_array_equal(lat.Psi, np.broadcast_to(pr.psi0, lat.Psi.shape))


def test_memoryless_latents_are_iid_normal():
    pr = params(phi=0.0, sig=0.5)
    X = np.stack([simulate_latents(pr, 1, np.random.default_rng(s)).X[0] for s in range(4000)])
    se = 0.5 / np.sqrt(4000)
    assert np.all(np.abs(X.mean(axis=0) - pr.x0) < 4 * se)
    np.testing.assert_allclose(X.var(axis=0), 0.25, rtol=0.1)


def test_stationary_variance_of_long_path():
    pr = params(K=1, phi=0.8, sig=0.3)
    X = simulate_latents(pr, 200_000, np.random.default_rng(2)).X[1000:, 0]
    assert X.var() == pytest.approx(0.09 / (1 - 0.64), rel=0.05)


def test_factor_covariance():
    pr = params(K=3, sig=0.0)
    lat = simulate_latents(pr, 100_000, np.random.default_rng(3))
    np.testing.assert_allclose(np.cov(lat.F.T), covariance(pr.x0, pr.psi0), atol=0.02)


def test_returns_above_minus_one_and_log_mean():
    rng = np.random.default_rng(4)
    B = rng.normal(size=(3, 2))
    F = np.tile(rng.normal(size=2), (100_000, 1))
    R = simulate_returns(B, np.full(3, 0.04), F, rng)
    assert np.all(R > -1)
    np.testing.assert_allclose(np.log1p(R).mean(axis=0), B @ F[0], atol=4 * 0.2 / np.sqrt(100_000))


def test_small_variance_zero_factor_returns_vanish():
    R = simulate_returns(np.ones((2, 1)), np.full(2, 1e-20), np.zeros((5, 1)), np.random.default_rng(0))
    assert np.max(np.abs(R)) < 1e-9


def test_predictive_mean_zero_loadings_is_exact():
    V = np.array([0.01, 0.04, 0.09])
    pr = params(B=np.zeros((3, 2)), V=V)
    mu = predictive_mean(pr, pr.x0, pr.psi0, 4, 3, np.random.default_rng(5))
    np.testing.assert_allclose(mu, np.broadcast_to(np.expm1(V / 2), (4, 3)), rtol=1e-15)


def test_predictive_mean_deterministic_variance_any_batch():
    pr = params(p=2, K=1, sig=0.0)
    expected = np.expm1(0.5 * (pr.B[:, 0] ** 2 * np.exp(pr.x0[0]) + pr.V))
    for batch in (1, 7):
        mu = predictive_mean(pr, pr.x0, pr.psi0, 3, batch, np.random.default_rng(batch))
        np.testing.assert_allclose(mu, np.broadcast_to(expected, (3, 2)), rtol=1e-14)


def test_predictive_mean_matches_return_simulation():
    pr = params(p=2, K=2, sig=0.3)
    rng = np.random.default_rng(6)
    mu = predictive_mean(pr, pr.x0, pr.psi0, 2, 20_000, rng)
    from unbiased_cso.msv import simulate_forward

    R, *_ = simulate_forward(pr, pr.x0, pr.psi0, 2, rng, 200_000)
    se = R.std(axis=0) / np.sqrt(R.shape[0])
    assert np.all(np.abs(R.mean(axis=0) - mu) < 4 * se + 1e-3)


def test_predictive_mean_error_scales_with_batch():
    pr = params(p=2, K=2, sig=0.5)
    sd = [np.std([predictive_mean(pr, pr.x0, pr.psi0, 1, b, np.random.default_rng(1000 * b + s))[0, 0] for s in range(300)])
          for b in (4, 64)]
    assert sd[0] / sd[1] == pytest.approx(4.0, rel=0.3)


def test_conditional_mean_matches_dense_formula():
    pr = params(p=3, K=3)
    rng = np.random.default_rng(7)
    X, Psi = rng.normal(size=3), rng.normal(size=3)
    S = covariance(X, Psi)
    dense = np.expm1(0.5 * np.diag(pr.B @ S @ pr.B.T + np.diag(pr.V)))
    np.testing.assert_allclose(conditional_return_mean(pr, X, Psi), dense, rtol=1e-12)


def test_log_terms_match_scipy():
    from scipy import stats

    rng = np.random.default_rng(8)
    X, Psi, F = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
    assert factor_log_terms(F, X, Psi) == pytest.approx(stats.multivariate_normal.logpdf(F, np.zeros(3), covariance(X, Psi)))
    B, V, y = rng.normal(size=(2, 3)), np.array([0.1, 0.2]), rng.normal(size=(1, 2))
    np.testing.assert_allclose(obs_log_terms(y, B, V, F[None]), stats.norm.logpdf(y, F @ B.T, np.sqrt(V)))
    path = rng.normal(size=(4, 1))
    ar = ar_log_terms(path, 0.2, 0.5, 0.3)
    prev = np.concatenate([[0.2], path[:-1, 0]])
    np.testing.assert_allclose(ar[:, 0], stats.norm.logpdf(path[:, 0], 0.2 + 0.5 * (prev - 0.2), 0.3))


def test_latent_path_shape_check():
    with pytest.raises(MsvDomainError):
        LatentPath(np.zeros((3, 2)), np.zeros((4, 2)), np.zeros((4, 1)))
