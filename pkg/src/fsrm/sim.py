"""Simulation of fractional Gaussian noise, fBm, fOU and synthetic FSRM intraday prices."""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg, signal

from fsrm.errors import ConfigError
from fsrm.info import normalize_hurst
from fsrm.models import FouParams, FsrmConfig, RegularitySeries, SamplePath

logger = logging.getLogger("fsrm.sim")

SeedLike = int | np.random.SeedSequence | None

# Below this length the exact Cholesky factor is cheap enough to use directly.
CHOLESKY_MAX_N = 16
MIN_BURN_IN = 10_000
REGULARITY_STEP = 0.01


def _check_hurst(hurst: float):
    if not 0.0 < hurst < 1.0:
        raise ConfigError(f"Hurst exponent must lie in (0, 1), got {hurst}")


def spawn_seeds(seed: SeedLike, n: int) -> list[np.random.SeedSequence]:
    """Independent child seeds, e.g. one per Monte Carlo replica."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n)


def derive_rng(seed: int, replica: int) -> np.random.Generator:
    """Generator for replica ``replica`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([seed, replica]))


def fgn_autocovariance(hurst: float, lags: np.ndarray, dt: float = 1.0, scale_c: float = 1.0):
    """gamma(k) = C^2 dt^(2H) (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    base = 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)
    return scale_c**2 * dt**h2 * base


def _cholesky_fgn(gamma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    factor = linalg.cholesky(linalg.toeplitz(gamma), lower=True)
    return factor @ rng.standard_normal(gamma.size)


def _circulant_fgn(gamma: np.ndarray, gamma_n: float, rng: np.random.Generator):
    """Davies-Harte synthesis; returns None when the embedding is not nonnegative-definite."""
    n = gamma.size
    row = np.concatenate([gamma, [gamma_n], gamma[:0:-1]])
    eigenvalues = np.fft.fft(row).real
    if eigenvalues.min() < -1e-10 * eigenvalues.max():
        return None
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    m = row.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    w = np.fft.fft(np.sqrt(eigenvalues / m) * z)
    return w[:n].real


def gen_fgn(
    hurst: float, n: int, dt: float = 1.0, scale_c: float = 1.0, seed: SeedLike = None
) -> np.ndarray:
    """n zero-mean Gaussian increments with the covariance of fBm increments of step dt."""
    _check_hurst(hurst)
    if n < 1:
        raise ConfigError(f"need at least one increment, got n={n}")
    if not dt > 0:
        raise ConfigError(f"time step must be positive, got {dt}")

    rng = np.random.default_rng(seed)
    gamma = fgn_autocovariance(hurst, np.arange(n + 1), dt, scale_c)
    if n <= CHOLESKY_MAX_N:
        return _cholesky_fgn(gamma[:n], rng)

    sample = _circulant_fgn(gamma[:n], gamma[n], rng)
    if sample is None:
        logger.warning(
            "Circulant embedding not nonnegative-definite (H=%.3f, n=%d); using Cholesky",
            hurst,
            n,
        )
        return _cholesky_fgn(gamma[:n], rng)
    return sample


def gen_fbm(
    hurst: float, n: int, dt: float = 1.0, scale_c: float = 1.0, seed: SeedLike = None
) -> SamplePath:
    """fBm path of n points starting at 0: the running sum of n-1 fGn increments."""
    _check_hurst(hurst)
    if n < 1:
        raise ConfigError(f"need at least one point, got n={n}")
    if n == 1:
        return SamplePath(values=np.zeros(1), dt=dt)
    increments = gen_fgn(hurst, n - 1, dt, scale_c, seed)
    return SamplePath(values=np.concatenate([[0.0], np.cumsum(increments)]), dt=dt)


def default_burn_in(lambda_: float, dt: float) -> int:
    return max(int(np.ceil(10.0 / (lambda_ * dt))), MIN_BURN_IN)


def gen_fou(
    params: FouParams,
    n: int,
    dt: float = 1.0,
    seed: SeedLike = None,
    burn_in: int | None = None,
) -> SamplePath:
    """Euler-Maruyama fOU path of n points, started at the mean, burn-in discarded.

    dY = -lambda (Y - mean) dt + eta dB^H
    """
    if n < 1:
        raise ConfigError(f"need at least one point, got n={n}")
    if dt * params.lambda_ >= 0.5:
        raise ConfigError(
            f"unstable discretisation: dt*lambda = {dt * params.lambda_:.3g} must be below 0.5"
        )
    if burn_in is None:
        burn_in = default_burn_in(params.lambda_, dt)
    if burn_in < 0:
        raise ConfigError(f"burn-in must be nonnegative, got {burn_in}")

    total = n + burn_in
    noise = params.eta * gen_fgn(params.hurst, total, dt, 1.0, seed)
    decay = 1.0 - params.lambda_ * dt
    # y[k] = decay * y[k-1] + noise[k], centred on the mean and started at 0
    y = signal.lfilter([1.0], [1.0, -decay], noise)
    return SamplePath(values=params.mean + y[burn_in:], dt=dt)


def clamp_regularity(h: np.ndarray) -> np.ndarray:
    """Map values outside (0, 1) through the arctan normalisation, leave others untouched."""
    h = np.asarray(h, dtype=float)
    outside = (h <= 0.0) | (h >= 1.0)
    return np.where(outside, normalize_hurst(h), h)


def quantize_regularity(h: np.ndarray) -> np.ndarray:
    """Round onto the REGULARITY_STEP grid, kept strictly inside (0, 1)."""
    q = np.round(np.asarray(h, dtype=float) / REGULARITY_STEP) * REGULARITY_STEP
    return np.round(np.clip(q, REGULARITY_STEP, 1.0 - REGULARITY_STEP), 10)


def _conditional_day_factors(hurst: float, r: int, scale_c: float) -> tuple[np.ndarray, np.ndarray]:
    """(gain, innovation) such that gain @ yesterday + innovation @ z is today's segment.

    Both blocks come from the Cholesky factor of the fGn covariance of two
    consecutive days of r steps.
    """
    gamma = fgn_autocovariance(hurst, np.arange(2 * r), 1.0 / r, scale_c)
    factor = linalg.cholesky(linalg.toeplitz(gamma), lower=True)
    l11, l21, l22 = factor[:r, :r], factor[r:, :r], factor[r:, r:]
    gain = linalg.solve_triangular(l11, l21.T, lower=True, trans="T").T
    return gain, l22


def gen_fsrm_prices(cfg: FsrmConfig) -> tuple[SamplePath, RegularitySeries]:
    """Synthetic FSRM log-prices as one continuous increment stream.

    The regularity H_i follows a daily fOU, clamped into (0, 1) and rounded to
    REGULARITY_STEP. Day 0 is an fGn segment with exponent H_0; every later day is
    drawn from the fGn(H_i) law of two consecutive days conditioned on the previous
    day's increments, so each pair of adjacent days is exactly fGn(H_i) and the
    close-to-close returns inherit the sign persistence the regularity implies.
    """
    r, days = cfg.obs_per_day, cfg.days
    regularity_seed, start_seed, noise_seed = spawn_seeds(cfg.seed, 3)

    h_path = gen_fou(cfg.fou, days, dt=1.0, seed=regularity_seed)
    h_clamped = clamp_regularity(h_path.values)
    n_clamped = int(np.sum(h_clamped != h_path.values))
    if n_clamped:
        logger.info("Clamped %d simulated regularities into (0, 1)", n_clamped)
    h_true = quantize_regularity(h_clamped)

    rng = np.random.default_rng(noise_seed)
    factors: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    increments = np.empty((days, r))
    increments[0] = gen_fgn(float(h_true[0]), r, 1.0 / r, cfg.scale_c, start_seed)
    for i in range(1, days):
        h = float(h_true[i])
        if h not in factors:
            factors[h] = _conditional_day_factors(h, r, cfg.scale_c)
        gain, innovation = factors[h]
        increments[i] = gain @ increments[i - 1] + innovation @ rng.standard_normal(r)
    logger.debug("FSRM path: %d days, %d distinct regularities", days, len(factors))

    log_prices = SamplePath(values=cfg.log_price0 + np.cumsum(increments.ravel()), dt=1.0 / r)
    truth = RegularitySeries(values=h_true, nu=max(r - 1, 4), day_index=np.arange(days), n_days=days)
    return log_prices, truth


def daily_closes(log_prices: SamplePath, r: int) -> np.ndarray:
    """Last observation of each complete day."""
    n_days = len(log_prices) // r
    return log_prices.values[r - 1 : n_days * r : r]
