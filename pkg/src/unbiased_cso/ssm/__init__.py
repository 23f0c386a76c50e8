from .adapter import SsmCsoModel, cso_adapter, model_set
from .data_io import read_dataset, write_dataset
from .kalman import kalman_loglik, kalman_loglik_and_score, kalman_score, kalman_smoother
from .kernel import PgasConfig, cpf_bs_chain_paths, cpf_bs_kernel, prior_path
from .model import (
    GAUSSIAN,
    SsmData,
    SsmDomainError,
    SsmParams,
    complete_log_likelihood,
    grad_obs,
    grad_transition,
    log_obs_density,
    log_transition,
    score_integrand,
    simulate,
    stationary_variance,
)
