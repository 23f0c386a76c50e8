"""Experiment configuration: TOML files validated into typed models.

Unknown keys are rejected everywhere, and every validation problem is reported
together with its dotted path in the file (``model.mu``, ``estimator.S_grid``).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..levels import LevelDistribution

EXPERIMENTS = {
    "rel-mse-vs-S": "bias^2 / variance / relative MSE of the averaged estimator against the number of estimates S",
    "msa-convergence": "relative MSE of stochastic approximation iterates across independent runs",
    "objective-trace": "portfolio objective along a stochastic approximation run",
    "level-decay": "L2 gap between coupled plug-in terms at levels l and l+2",
    "backtest-synthetic": "optimized vs. uniform portfolio on held-out synthetic returns",
}


class ConfigError(ValueError):
    """Aggregated configuration problems, one ``path: message`` line each."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  {p}" for p in problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


PosInt = Annotated[int, Field(ge=1)]
PosFloat = Annotated[float, Field(gt=0)]


class SsmModelConfig(_Strict):
    kind: Literal["ssm"]
    sigma: PosFloat = 0.3
    mu: Annotated[float, Field(gt=-1, lt=1)] = 0.95
    Sigma: PosFloat = 0.2
    T: PosInt = 30
    x0: float = 0.0
    data_seed: int = Field(1, ge=0)
    observation: Union[Literal["gaussian"], PosInt] = "gaussian"
    models: Optional[list[Union[Literal["gaussian"], PosInt]]] = None
    n_particles: Annotated[int, Field(ge=2)] = 10
    init_sweeps: Annotated[int, Field(ge=0)] = 1
    sweeps_per_step: PosInt = 1
    per_observation: bool = False
    data_file: Optional[str] = None

    @property
    def xi(self) -> tuple[float, float, float]:
        return (self.sigma, self.mu, self.Sigma)

    @property
    def model_set(self) -> tuple:
        return tuple(self.models) if self.models else (self.observation,)


class ToyModelConfig(_Strict):
    kind: Literal["toy"]
    transition: list[list[float]] = [[0.7, 0.3], [0.4, 0.6]]
    initial: list[float] = [0.9, 0.1]
    g_table: list[list[float]] = [[1.0, -2.0], [0.5, 3.0]]
    z: Annotated[int, Field(ge=0)] = 0
    xi: float = 0.5

    @model_validator(mode="after")
    def _check_instance(self):
        from ..toy import DiscreteCso

        inst = DiscreteCso(self.transition, self.initial, self.g_table)
        if self.z >= inst.n_outer:
            raise ValueError(f"z={self.z} is outside the {inst.n_outer} outer states")
        return self


class MsvModelConfig(_Strict):
    kind: Literal["msv"]
    p: PosInt = 20
    K: PosInt = 5
    history: PosInt = 100
    horizon: PosInt = 5
    holdout: Annotated[int, Field(ge=0)] = 0
    zeta: Annotated[float, Field(ge=0)] = 20.0
    predictive_batch: PosInt = 64
    independent_means: bool = False
    instance_seed: int = Field(11, ge=0)
    instance_file: Optional[str] = None
    burn: Annotated[int, Field(ge=0)] = 1000
    framework: Literal[1, 2] = 1


ModelConfig = Annotated[Union[SsmModelConfig, ToyModelConfig, MsvModelConfig], Field(discriminator="kind")]


class EstimatorConfig(_Strict):
    distribution: Literal["truncated-log", "geometric", "point"] = "truncated-log"
    q: PosInt = 4
    l_max: PosInt = 10
    beta: Annotated[float, Field(gt=0, le=1)] = 0.75
    level: PosInt = 1
    level_cap: Optional[PosInt] = None
    weighting: Literal["normalized", "paper-literal"] = "normalized"
    S_grid: list[PosInt] = [1, 2, 4, 8, 16, 32, 64]
    reference_estimates: PosInt = 20000

    @field_validator("S_grid")
    @classmethod
    def _grid(cls, v):
        if not v:
            raise ValueError("S_grid must not be empty")
        if sorted(set(v)) != v:
            raise ValueError("S_grid must be strictly increasing")
        return v

    def distribution_object(self) -> LevelDistribution:
        if self.distribution == "geometric":
            return LevelDistribution.geometric(self.beta)
        if self.distribution == "point":
            return LevelDistribution.point(self.level)
        return LevelDistribution.truncated_log(q=self.q, l_max=self.l_max)


class ReplicationConfig(_Strict):
    replicates: Annotated[int, Field(ge=2)] = 200
    runs: PosInt = 20
    seed: int = Field(0, ge=0)


class MsaConfig(_Strict):
    iterations: PosInt = 1000
    S: PosInt = 5
    outer_steps_per_update: PosInt = 1
    gamma0: Union[PosFloat, dict[str, PosFloat]] = 0.1
    offset: Annotated[int, Field(ge=0)] = 100
    exponent: Annotated[float, Field(gt=0.5, le=1)] = 0.6
    xi0: Optional[list[float]] = None
    transforms: Optional[list[Literal["identity", "log"]]] = None
    reference: Optional[list[float]] = None
    reference_iterations: PosInt = 20000
    checkpoints: list[PosInt] = [50, 1000]
    clip: PosFloat = 1e6


class OutputConfig(_Strict):
    dir: str = "results"
    format: Literal["csv", "csv+plot"] = "csv+plot"


class ExperimentConfig(_Strict):
    experiment: Literal["rel-mse-vs-S", "msa-convergence", "objective-trace", "level-decay", "backtest-synthetic"]
    model: ModelConfig
    estimator: EstimatorConfig = EstimatorConfig()
    replication: ReplicationConfig = ReplicationConfig()
    msa: MsaConfig = MsaConfig()
    output: OutputConfig = OutputConfig()
    max_level: PosInt = 10

    @model_validator(mode="after")
    def _compatible(self):
        allowed = {
            "rel-mse-vs-S": ("ssm", "toy"),
            "msa-convergence": ("ssm",),
            "objective-trace": ("msv",),
            "level-decay": ("ssm", "toy"),
            "backtest-synthetic": ("msv",),
        }[self.experiment]
        if self.model.kind not in allowed:
            raise ValueError(f"experiment {self.experiment!r} needs a model of kind {' or '.join(allowed)}")
        if self.experiment == "backtest-synthetic" and self.model.holdout < 2:
            raise ValueError("backtest-synthetic needs model.holdout >= 2")
        return self

    def digest(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _format_errors(exc: ValidationError) -> list[str]:
    problems = []
    for err in exc.errors():
        # drop discriminator tags such as "ssm" from the location
        loc = [str(part) for part in err["loc"] if part not in ("ssm", "toy", "msv")]
        problems.append(f"{'.'.join(loc) or '<root>'}: {err['msg']}")
    return problems


def parse_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    data = json.loads(json.dumps(raw))  # deep copy
    for dotted, value in (overrides or {}).items():
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"<file>: {path} does not exist"]) from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"<file>: {path} is not valid TOML ({exc})"]) from None
    return parse_config(raw, overrides)
