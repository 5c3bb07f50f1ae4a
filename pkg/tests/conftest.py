import numpy as np
import pytest
from hypothesis import settings

from fsrm.dataio import write_price_csv
from fsrm.models import SamplePath

settings.register_profile("fsrm", deadline=None, max_examples=40)
settings.load_profile("fsrm")

OSC_R = 256
OSC_DAYS = 120


def oscillating_log_prices(h_days, r: int, amplitude: float = 0.01, seed: int = 0) -> SamplePath:
    """Days of cosine log-prices whose local Hurst estimate is close to h.

    For cos(omega t) the ratio of lag-2 to lag-1 second differences gives
    H = 2 + 2 log2 cos(omega / 2).
    """
    rng = np.random.default_rng(seed)
    h_days = np.asarray(h_days, dtype=float)
    levels = np.cumsum(rng.normal(0.0, 0.01, h_days.size))
    phases = rng.uniform(0.0, 2.0 * np.pi, h_days.size)
    t = np.arange(r)
    days = [
        level + amplitude * np.cos(2.0 * np.arccos(2.0 ** ((h - 2.0) / 2.0)) * t + phase)
        for h, level, phase in zip(h_days, levels, phases)
    ]
    return SamplePath(values=np.concatenate(days), dt=1.0 / r)


def regularity_pattern(n_days: int) -> np.ndarray:
    # Itself a cosine with local Hurst 1/2, so the fOU fit lands inside (0, 1).
    omega = 2.0 * np.arccos(2.0 ** -0.75)
    return 0.5 + 0.15 * np.cos(omega * np.arange(n_days))


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    config_dir = tmp_path / "fsrm-config"
    monkeypatch.setattr("fsrm.config.CONFIG_DIR", config_dir)
    monkeypatch.setattr("fsrm.config.CONFIG_PATH", config_dir / "config.yaml")
    yield config_dir


@pytest.fixture
def oscillating_path():
    return oscillating_log_prices(regularity_pattern(OSC_DAYS), OSC_R)


@pytest.fixture
def price_csv(tmp_path, oscillating_path):
    path = tmp_path / "prices.csv"
    write_price_csv(path, oscillating_path, OSC_R)
    return path
