"""Unbiased gradient estimation for conditional stochastic optimization.

The core pieces are the randomized multilevel estimator (:mod:`.estimator`),
the level laws it draws from (:mod:`.levels`) and the Markovian stochastic
approximation driver (:mod:`.msa`). Model families live in :mod:`.ssm`,
:mod:`.msv` and :mod:`.toy`; :mod:`.harness` runs the experiments.
"""

from .estimator import (
    CsoModel,
    GradientEstimate,
    ModelEvaluationError,
    NumericError,
    ScheduleMismatchError,
    composite_ladder,
    estimate_H,
    estimate_H_averaged,
    estimate_H_batch,
)
from .levels import LevelDistribution, level_pmf, sample_level
from .msa import MsaDivergence, MsaTrajectory, Reparameterization, StepSchedule, msa_run, step_size

__version__ = "0.1.0"
