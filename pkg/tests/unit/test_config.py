import os

import pytest
from pydantic import ValidationError

from oscdom.config import SUITES, EngineConfig, ExperimentConfig, load_config
from oscdom.errors import ConfigError

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "..", "configs")


def test_defaults():
    cfg = load_config()
    assert cfg.operator == "hilbert"
    assert cfg.grid == 4096
    assert cfg.seed == 42
    assert cfg.corpus == "default"
    engine = cfg.engine_config()
    assert engine.dim == 1
    assert engine.lambda_n == 1 / 16
    assert engine.max_depth == 8


def test_shipped_configs_validate():
    for name in sorted(os.listdir(CONFIG_DIR)):
        if name.endswith(".toml"):
            load_config(os.path.join(CONFIG_DIR, name))


def test_smoke_config(smoke_config):
    assert smoke_config.grid == 256
    assert smoke_config.out == "mem://smoke"
    assert smoke_config.workers == 2
    assert [m.name for m in smoke_config.corpus] == ["plateau", "bump", "zero"]
    engine = smoke_config.engine_config()
    assert engine.rings == 3
    assert engine.tail_tolerance == 0.5


def test_overrides_reach_nested_engine_fields():
    cfg = load_config(overrides={"dim": 2, "engine.lambda_n": 0.01, "engine.rings": 2, "seed": None})
    engine = cfg.engine_config()
    assert engine.dim == 2
    assert engine.lambda_n == 0.01
    assert engine.rings == 2
    # the eta default follows the dimension
    assert engine.target_eta == pytest.approx(0.01)
    assert cfg.seed == 42


@pytest.mark.parametrize("overrides, field", [
    ({"dim": 3}, "dim"),
    ({"grid": 1000}, "grid"),
    ({"plane_grid": 48}, "plane_grid"),
    ({"workers": 0}, "workers"),
    ({"bogus": 1}, "bogus"),
    ({"engine.lambda_n": 1.5}, "engine.lambda_n"),
    ({"engine.target_eta": 0.0}, "engine.target_eta"),
    ({"engine.max_depth": 0}, "engine.max_depth"),
])
def test_invalid_values_name_their_field(overrides, field):
    with pytest.raises(ConfigError) as exc:
        load_config(overrides=overrides)
    assert exc.value.field == field


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(tmp_path / "missing.toml")
    assert exc.value.field == "config"
    bad = tmp_path / "bad.toml"
    bad.write_text("grid = = 3\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_engine_config_is_frozen():
    engine = EngineConfig.for_dim(1)
    with pytest.raises(ValidationError):
        engine.rings = 2
    with pytest.raises(ValidationError):
        EngineConfig(dim=1, unknown=3)


def test_suite_names():
    assert SUITES == (
        "stats-oracles", "kernel-audit", "prop-cr", "sparse-mr",
        "sparse-spd-compare", "sobolev", "necessity-probe",
    )
    assert ExperimentConfig().plane_grid == 256
