from pathlib import Path

import pytest

from unbiased_cso.harness import ConfigError, load_config, parse_config
from unbiased_cso.levels import LevelDistribution

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.toml"))


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.experiment and len(cfg.digest()) == 64


def test_shipped_config_set_is_complete():
    kinds = {load_config(p).experiment for p in CONFIGS}
    assert kinds == {"rel-mse-vs-S", "msa-convergence", "objective-trace", "level-decay", "backtest-synthetic"}


def test_all_problems_reported_with_paths():
    raw = {"experiment": "rel-mse-vs-S", "model": {"kind": "ssm", "mu": 1.5, "Sigma": -1}, "bogus": 1}
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    problems = info.value.problems
    assert any(p.startswith("model.mu:") for p in problems)
    assert any(p.startswith("model.Sigma:") for p in problems)
    assert any(p.startswith("bogus:") and "Extra inputs" in p for p in problems)


@pytest.mark.parametrize(
    "raw, fragment",
    [
        ({"experiment": "objective-trace", "model": {"kind": "ssm"}}, "needs a model of kind msv"),
        ({"experiment": "msa-convergence", "model": {"kind": "toy"}}, "needs a model of kind ssm"),
        ({"experiment": "backtest-synthetic", "model": {"kind": "msv"}}, "holdout >= 2"),
        ({"experiment": "rel-mse-vs-S", "model": {"kind": "toy", "z": 5}}, "outside"),
        ({"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}, "estimator": {"S_grid": [4, 2]}}, "strictly increasing"),
        ({"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}, "estimator": {"beta": 1.5}}, "estimator.beta"),
        ({"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}, "estimator": {"weighting": "literal"}}, "estimator.weighting"),
        ({"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}, "msa": {"exponent": 0.5}}, "msa.exponent"),
        ({"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}, "replication": {"replicates": 1}}, "replication.replicates"),
        ({"experiment": "nope", "model": {"kind": "toy"}}, "experiment"),
        ({"experiment": "rel-mse-vs-S", "model": {"kind": "quantum"}}, "model"),
    ],
)
def test_invalid_configs(raw, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    assert fragment in str(info.value)


def test_overrides_apply_dotted_paths():
    cfg = parse_config({"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}},
                       {"replication.seed": 9, "output.dir": "/tmp/x", "estimator.l_max": 3})
    assert cfg.replication.seed == 9 and cfg.output.dir == "/tmp/x" and cfg.estimator.l_max == 3


def test_distribution_objects():
    base = {"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}}
    assert parse_config({**base, "estimator": {"distribution": "geometric", "beta": 0.5}}).estimator.distribution_object() == LevelDistribution.geometric(0.5)
    assert parse_config({**base, "estimator": {"distribution": "point", "level": 3}}).estimator.distribution_object() == LevelDistribution.point(3)


def test_digest_depends_on_content():
    a = parse_config({"experiment": "rel-mse-vs-S", "model": {"kind": "toy"}})
    b = parse_config({"experiment": "rel-mse-vs-S", "model": {"kind": "toy", "xi": 0.7}})
    assert a.digest() != b.digest()
    assert a.digest() == parse_config({"model": {"kind": "toy"}, "experiment": "rel-mse-vs-S"}).digest()


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("experiment = [\n")
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(bad)
