import logging
from pathlib import Path

import pytest
import yaml

from fsrm.config import DEFAULT_CONFIG, Config, RunConfig
from fsrm.errors import ConfigError


def test_config_properties():
    conf = Config()
    assert conf.tol == DEFAULT_CONFIG["analytics"]["tol"]
    assert conf.seed == DEFAULT_CONFIG["simulation"]["seed"]
    assert conf.log_level == DEFAULT_CONFIG["logging"]["level"]
    assert conf.out_dir == Path(DEFAULT_CONFIG["output"]["dir"])
    assert conf.section("forecast")["tau"] == [1, 2]


def test_section_is_a_copy():
    conf = Config()
    conf.section("forecast")["tau"].append(99)
    assert conf.section("forecast")["tau"] == [1, 2]


def test_update_dict():
    conf = Config()
    base = {"a": {"b": 1}, "c": 2}
    update = {"a": {"b": 3, "d": 4}, "e": 5}
    conf._update_dict(base, update)
    assert base == {"a": {"b": 3, "d": 4}, "c": 2, "e": 5}


def test_load_config(isolated_config):
    isolated_config.mkdir()
    user_config = {
        "analytics": {"tol": 1e-6},
        "forecast": {"beta_max": 0.7},
        "simulation": {"seed": 11},
    }
    with open(isolated_config / "config.yaml", "w") as f:
        yaml.dump(user_config, f)

    conf = Config()
    assert conf.tol == 1e-6
    assert conf.seed == 11
    assert conf.section("forecast")["beta_max"] == 0.7
    assert conf.section("forecast")["beta_min"] == 0.5  # remains default


def test_flat_keys(tmp_path):
    path = tmp_path / "flat.yaml"
    path.write_text("tol: 1.0e-7\nbeta_step: 0.05\n")
    conf = Config(path)
    assert conf.tol == 1e-7
    assert conf.section("forecast")["beta_step"] == 0.05


def test_unknown_flat_key(tmp_path):
    path = tmp_path / "flat.yaml"
    path.write_text("no_such_key: 3\n")
    with pytest.raises(ConfigError, match="no_such_key"):
        Config(path)


def test_explicit_path_must_exist(tmp_path):
    with pytest.raises(ConfigError):
        Config(tmp_path / "missing.yaml")


def test_explicit_invalid_yaml(tmp_path):
    path = tmp_path / "invalid.yaml"
    path.write_text("invalid: { : yaml")
    with pytest.raises(ConfigError):
        Config(path)


def test_ensure_config_file(isolated_config):
    config_file = isolated_config / "config.yaml"

    conf = Config()
    assert not config_file.exists()

    conf.ensure_config_file()
    assert config_file.exists()
    with open(config_file, "r") as f:
        loaded = yaml.safe_load(f)
    assert loaded == DEFAULT_CONFIG


def test_load_invalid_yaml(isolated_config, caplog):
    isolated_config.mkdir()
    (isolated_config / "config.yaml").write_text("invalid: { : yaml")

    # The default location falls back to defaults and logs the problem
    with caplog.at_level(logging.ERROR, logger="fsrm.config"):
        conf = Config()
    assert "Error loading config" in caplog.text
    assert conf.tol == 1e-8  # stayed default


def test_run_config_resolve_overrides():
    conf = Config()
    cfg = RunConfig.resolve(conf, tau=[3], beta_max=0.6, seed=None, out_dir=Path("elsewhere"))
    assert cfg.tau == [3]
    assert cfg.beta_max == 0.6
    assert cfg.seed == conf.seed
    assert cfg.out_dir == Path("elsewhere")
    assert cfg.eps_factor == DEFAULT_CONFIG["evaluation"]["eps_factor"]


def test_beta_grid():
    cfg = RunConfig(beta_min=0.5, beta_max=0.75, beta_step=0.01)
    grid = cfg.beta_grid
    assert len(grid) == 26
    assert grid[0] == 0.5
    assert grid[-1] == 0.75
    assert 0.69 in grid


@pytest.mark.parametrize(
    "beta_max, step, expected",
    [(1.0, 0.3, [0.5, 0.8]), (0.75, 0.1, [0.5, 0.6, 0.7]), (0.7, 0.1, [0.5, 0.6, 0.7])],
)
def test_beta_grid_never_exceeds_max(beta_max, step, expected):
    grid = RunConfig(beta_min=0.5, beta_max=beta_max, beta_step=step).beta_grid
    assert grid == expected
    assert max(grid) <= beta_max


@pytest.mark.parametrize(
    "overrides",
    [
        {"beta_min": 0.4},
        {"beta_max": 1.2},
        {"beta_min": 0.7, "beta_max": 0.6},
        {"tau": [0]},
        {"r": 3},
        {"tol": 0.0},
        {"eps_factor": -1.0},
    ],
)
def test_run_config_rejects(overrides):
    with pytest.raises(ConfigError):
        RunConfig.resolve(Config(), **overrides)
