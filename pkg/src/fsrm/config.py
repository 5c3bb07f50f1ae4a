import copy
import logging
import math
import os
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fsrm.errors import ConfigError

logger = logging.getLogger("fsrm.config")

GRID_SLACK = 1e-9


def grid_steps(start: float, stop: float, step: float) -> int:
    """Whole steps from start that stay at or below stop, allowing for float error in the quotient."""
    return math.floor((stop - start) / step + GRID_SLACK)


DEFAULT_CONFIG = {
    "simulation": {
        "hurst": 0.3,
        "eta": 1.0,
        "lambda": 0.05,
        "mean": 0.5,
        "scale_c": 0.01,
        "obs_per_day": 391,
        "days": 250,
        "seed": 0,
    },
    "analytics": {
        "tol": 1e-8,
        "s_max": 10.0,
        "step": 0.01,
    },
    "forecast": {
        "r": None,
        "tau": [1, 2],
        "beta_min": 0.5,
        "beta_max": 0.75,
        "beta_step": 0.01,
    },
    "evaluation": {
        "bds_dim": 3,
        "eps_factor": 1.0,
        "bootstrap_samples": 200,
    },
    "output": {
        "dir": "fsrm-out",
    },
    "logging": {
        "level": "INFO",
    },
}

CONFIG_DIR = Path(os.environ.get("FSRM_CONFIG_DIR", Path.home() / ".config" / "fsrm"))
CONFIG_PATH = CONFIG_DIR / "config.yaml"


class Config:
    def __init__(self, path: Path | None = None):
        self._config = copy.deepcopy(DEFAULT_CONFIG)
        self.path = path
        self.load()

    def load(self):
        if self.path is not None:
            # An explicitly requested file must be usable.
            if not self.path.exists():
                raise ConfigError(f"config file not found: {self.path}")
            try:
                self._apply(self._read(self.path))
            except (yaml.YAMLError, ConfigError) as e:
                raise ConfigError(f"Error loading config from {self.path}: {e}") from e
            return

        if CONFIG_PATH.exists():
            try:
                self._apply(self._read(CONFIG_PATH))
            except Exception as e:
                logger.error(f"Error loading config from {CONFIG_PATH}: {e}")

    @staticmethod
    def _read(path: Path) -> dict:
        with open(path, "r") as f:
            user_config = yaml.safe_load(f)
        if user_config is None:
            return {}
        if not isinstance(user_config, dict):
            raise ConfigError("config file must contain a mapping")
        return user_config

    def _apply(self, user_config: dict):
        nested = {k: v for k, v in user_config.items() if isinstance(v, dict)}
        self._update_dict(self._config, nested)
        # Flat `key: value` entries are matched against every section.
        for key, value in user_config.items():
            if isinstance(value, dict):
                continue
            sections = [s for s, body in self._config.items() if key in body]
            if not sections:
                raise ConfigError(f"unknown config key: {key}")
            for section in sections:
                self._config[section][key] = value

    def _update_dict(self, base_dict, update_with):
        for key, value in update_with.items():
            if (
                isinstance(value, dict)
                and key in base_dict
                and isinstance(base_dict[key], dict)
            ):
                self._update_dict(base_dict[key], value)
            else:
                base_dict[key] = value

    def section(self, name: str) -> dict:
        return copy.deepcopy(self._config[name])

    @property
    def tol(self) -> float:
        return float(self._config["analytics"]["tol"])

    @property
    def seed(self) -> int:
        return int(self._config["simulation"]["seed"])

    @property
    def out_dir(self) -> Path:
        return Path(os.path.expanduser(self._config["output"]["dir"]))

    @property
    def log_level(self) -> str:
        return self._config["logging"]["level"]

    def ensure_config_file(self):
        """Create a default config file if it doesn't exist."""
        if not CONFIG_PATH.exists():
            CONFIG_DIR.mkdir(parents=True, exist_ok=True)
            with open(CONFIG_PATH, "w") as f:
                yaml.dump(DEFAULT_CONFIG, f, default_flow_style=False)
            logger.info(f"Created default config at {CONFIG_PATH}")


class RunConfig(BaseModel):
    """Fully resolved settings of one pipeline run: config file values with CLI overrides."""

    model_config = ConfigDict(frozen=True)

    input: Path | None = None
    r: int | None = Field(default=None, ge=4)
    tau: list[int] = Field(default_factory=lambda: [1, 2])
    beta_min: float = 0.5
    beta_max: float = 0.75
    beta_step: float = Field(default=0.01, gt=0.0)
    tol: float = Field(default=1e-8, gt=0.0)
    seed: int = 0
    out_dir: Path = Path("fsrm-out")
    eps_factor: float = Field(default=1.0, gt=0.0)
    bds_dim: int = Field(default=3, ge=2)
    bootstrap_samples: int = Field(default=200, ge=0)

    @model_validator(mode="after")
    def _check_grid(self) -> "RunConfig":
        if not 0.5 <= self.beta_min <= self.beta_max <= 1.0:
            raise ValueError("beta grid must satisfy 0.5 <= beta_min <= beta_max <= 1")
        if not self.tau or min(self.tau) < 1:
            raise ValueError("every tau must be >= 1")
        return self

    @property
    def beta_grid(self) -> list[float]:
        n = grid_steps(self.beta_min, self.beta_max, self.beta_step)
        # Rounded so that grid values print and compare cleanly.
        return [round(self.beta_min + k * self.beta_step, 10) for k in range(n + 1)]

    @classmethod
    def resolve(cls, conf: Config, **overrides) -> "RunConfig":
        """Merge config sections with CLI overrides; ``None`` overrides are ignored."""
        values = {}
        values.update(conf.section("forecast"))
        values.update(
            {k: v for k, v in conf.section("evaluation").items() if k in cls.model_fields}
        )
        values["tol"] = conf.tol
        values["seed"] = conf.seed
        values["out_dir"] = conf.out_dir
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid run configuration: {e}") from e
