from .adapter import F1Outer, F2Inner, MsvF1Model, MsvF2Model, PredictiveDraw, cso_adapter_f1, cso_adapter_f2
from .backtest import BacktestMetrics, backtest_metrics, portfolio_returns, wealth_path
from .model import (
    LatentPath,
    MsvDomainError,
    MsvParams,
    MsvState,
    conditional_return_mean,
    forward_latents,
    log_posterior,
    predictive_mean,
    sample_theta_prior,
    simulate_forward,
    simulate_latents,
    simulate_returns,
)
from .mwg import MwgConfig, mwg_sweep
from .payoff import PayoffConfig, grad_payoff_wrt_logits, grad_payoff_wrt_weights, payoff_g
from .structure import (
    covariance,
    eigenvector_matrix,
    omega_to_psi,
    pair_indices,
    psi_to_omega,
    rotation_matrix,
    softmax_jacobian,
    softmax_weights,
)
from .synthetic import SyntheticInstance, initial_state, make_instance, read_instance, write_instance
