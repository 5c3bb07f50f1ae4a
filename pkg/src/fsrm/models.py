"""Domain types.

Scalar parameter bundles and report rows are pydantic models; containers that
hold numpy arrays are frozen dataclasses validated on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fsrm.errors import ConfigError, DataError

Sign = Literal[-1, 0, 1]

DEFAULT_SAMPLE_CAP = 50_000_000


class FouParams(BaseModel):
    """Parameters of a fractional Ornstein-Uhlenbeck process around ``mean``."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    hurst: float = Field(gt=0.0, lt=1.0)
    eta: float = Field(gt=0.0)
    lambda_: float = Field(gt=0.0, alias="lambda")
    mean: float = 0.5

    @classmethod
    def of(cls, hurst: float, eta: float, lambda_: float, mean: float = 0.5) -> "FouParams":
        try:
            return cls(hurst=hurst, eta=eta, lambda_=lambda_, mean=mean)
        except ValidationError as e:
            raise ConfigError(f"invalid fOU parameters: {e}") from e


class FsrmConfig(BaseModel):
    """Settings for a synthetic FSRM intraday price path."""

    model_config = ConfigDict(frozen=True)

    fou: FouParams
    scale_c: float = Field(default=0.01, gt=0.0)
    obs_per_day: int = Field(default=391, ge=4)
    days: int = Field(default=250, ge=2)
    seed: int = 0
    log_price0: float = 0.0
    max_samples: int = DEFAULT_SAMPLE_CAP

    @model_validator(mode="after")
    def _check_memory_cap(self) -> "FsrmConfig":
        if self.obs_per_day * self.days > self.max_samples:
            raise ValueError(
                f"r*R = {self.obs_per_day * self.days} exceeds the sample cap {self.max_samples}"
            )
        return self


class FouEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    hurst_hat: float
    eta_hat: float = Field(gt=0.0)
    lambda_hat: float = Field(gt=0.0)
    sample_size: int


class ForecastSignal(BaseModel):
    """One day of the filtered sign forecast."""

    model_config = ConfigDict(frozen=True)

    day: int
    prob_up: float = Field(gt=0.0, lt=1.0)
    state: Sign
    past_sign: Sign
    predicted_sign: Sign
    realized_sign: Sign

    @model_validator(mode="after")
    def _check_product(self) -> "ForecastSignal":
        if self.predicted_sign != self.past_sign * self.state:
            raise ValueError("predicted_sign must equal past_sign * state")
        return self

    @property
    def active(self) -> bool:
        return self.predicted_sign != 0


class EvaluationReport(BaseModel):
    """Hit rate and test p-values for one (tau, beta) cell."""

    model_config = ConfigDict(frozen=True)

    tau: int = Field(ge=1)
    beta: float = Field(ge=0.5, le=1.0)
    hit_rate: float | None = None
    n_active: int = 0
    hits: int = 0
    binom_pvalue: float | None = None
    bds_pvalue: float | None = None
    bds_pvalue_m2: float | None = None
    skipped: bool = False


@dataclass(frozen=True)
class SamplePath:
    """A uniformly sampled real path; ``dt`` and ``origin`` are in days."""

    values: np.ndarray
    dt: float
    origin: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise DataError("a sample path needs at least one value")
        if not np.all(np.isfinite(values)):
            raise DataError("sample path contains non-finite values")
        if not self.dt > 0:
            raise DataError(f"time step must be positive, got {self.dt}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.origin + self.dt * np.arange(self.values.size)


@dataclass(frozen=True)
class RegularitySeries:
    """Daily Hurst estimates. Days listed in ``gaps`` were degenerate and dropped."""

    values: np.ndarray
    nu: int
    day_index: np.ndarray
    n_days: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        day_index = np.asarray(self.day_index, dtype=int)
        if values.shape != day_index.shape:
            raise DataError("values and day_index must have the same length")
        if not np.all(np.isfinite(values)):
            raise DataError("regularity series contains non-finite values")
        if self.nu < 4:
            raise ConfigError(f"window must be at least 4, got {self.nu}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "day_index", day_index)

    def __len__(self) -> int:
        return self.values.size

    @property
    def gaps(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n_days), self.day_index)

    def select(self, lo: int, hi: int) -> "RegularitySeries":
        """Entries whose day index lies in [lo, hi)."""
        mask = (self.day_index >= lo) & (self.day_index < hi)
        return RegularitySeries(
            values=self.values[mask], nu=self.nu, day_index=self.day_index[mask], n_days=self.n_days
        )


@dataclass(frozen=True)
class BinarySeries:
    symbols: np.ndarray
    source_lag: float = 1.0

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.int8)
        if symbols.ndim != 1 or symbols.size == 0:
            raise DataError("binary series must be a nonempty 1-d sequence")
        if np.any((symbols != 0) & (symbols != 1)):
            raise DataError("binary series symbols must be 0 or 1")
        if not self.source_lag > 0:
            raise ConfigError("source lag must be positive")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return self.symbols.size


@dataclass(frozen=True)
class WordDistribution:
    """Relative frequencies of the 2**L binary words, indexed by the word read as an integer."""

    word_length: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (2**self.word_length,):
            raise DataError(f"expected {2**self.word_length} word probabilities")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise DataError("word probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", probs)

    def as_dict(self) -> dict[str, float]:
        return {
            format(code, f"0{self.word_length}b"): float(p) for code, p in enumerate(self.probs)
        }


@dataclass(frozen=True)
class SerialInfoResult:
    info: float
    L: int
    n_words: int


@dataclass(frozen=True)
class CorrelationCurve:
    hurst: float
    product_grid: np.ndarray
    rho: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class LagMinResult:
    s_star: float
    rho_min: float
