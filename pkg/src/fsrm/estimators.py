"""Two-stage estimation: daily local Hurst exponents from log-prices, then fOU parameters."""

from __future__ import annotations

import logging
import math

import numpy as np
from pydantic import ValidationError
from scipy import special, stats

from fsrm.errors import ConfigError, DataError, DegenerateWindowError, FsrmError, NumericalError
from fsrm.models import FouEstimate, RegularitySeries, SamplePath
from fsrm.sim import SeedLike

logger = logging.getLogger("fsrm.estimators")

MIN_WINDOW = 4
MIN_FOU_SAMPLES = 10
ROUNDING_FACTOR = 64.0


def _lag2_count(nu: int) -> int:
    """Number of lag-2 second-difference terms paired with a window of nu terms."""
    return (nu - 1) // 2 + 1


def max_window(n: int) -> int:
    """Largest nu whose two second-difference sums both fit in n samples ending at t = n-1."""
    nu = n - 2
    while nu >= MIN_WINDOW and 2 * (_lag2_count(nu) - 1) + 4 > n - 1:
        nu -= 1
    if nu < MIN_WINDOW:
        raise ConfigError(f"{n} samples are too few for a window of at least {MIN_WINDOW}")
    return nu


def _second_difference_means(x: np.ndarray, nu: int, t: int) -> tuple[float, float]:
    k = _lag2_count(nu)
    if nu < MIN_WINDOW:
        raise ConfigError(f"window must be at least {MIN_WINDOW}, got {nu}")
    if t - nu - 1 < 0 or t - 2 * (k - 1) - 4 < 0 or t >= x.size:
        raise DataError(f"index t={t} leaves too little history for a window of {nu}")

    lag1 = x[t - nu - 1 : t + 1]
    d1 = lag1[2:] - 2.0 * lag1[1:-1] + lag1[:-2]
    lag2 = x[t - 2 * (k - 1) - 4 : t + 1 : 2]
    d2 = lag2[2:] - 2.0 * lag2[1:-1] + lag2[:-2]
    return float(np.mean(d1**2)), float(np.mean(d2**2))


def local_hurst(x, nu: int, t: int) -> float:
    """1/2 log2(M'/M) from second differences at lags 1 and 2 in the window ending at t.

    M is the mean of nu squared lag-1 second differences, M' the mean of the
    floor((nu-1)/2)+1 squared lag-2 second differences.
    """
    x = np.asarray(x, dtype=float)
    m, m_prime = _second_difference_means(x, nu, t)
    # Affine data leaves only rounding noise in the second differences.
    floor = (ROUNDING_FACTOR * np.finfo(float).eps * np.max(np.abs(x[: t + 1]))) ** 2
    if m <= floor or m_prime <= floor:
        raise DegenerateWindowError(f"vanishing second differences in the window ending at {t}")
    return 0.5 * math.log2(m_prime / m)


def day_slices(n_samples: int, r: int) -> list[slice]:
    """Disjoint index ranges of the complete days of a path with r observations per day."""
    return [slice(i * r, (i + 1) * r) for i in range(n_samples // r)]


def hurst_series(log_prices: SamplePath, r: int) -> RegularitySeries:
    """One Hurst estimate per complete day, each from that day's r observations only.

    Degenerate days are left out; their indices appear in ``RegularitySeries.gaps``.
    """
    if len(log_prices) < 2 * r:
        raise DataError(f"need at least two days of {r} observations, got {len(log_prices)}")
    nu = max_window(r)
    values, days = [], []
    slices = day_slices(len(log_prices), r)
    for i, day in enumerate(slices):
        try:
            values.append(local_hurst(log_prices.values[day], nu, r - 1))
            days.append(i)
        except DegenerateWindowError:
            logger.warning("Day %d is degenerate (flat or affine prices); dropped", i)
    if not values:
        raise DegenerateWindowError("every day is degenerate")
    return RegularitySeries(values=np.array(values), nu=nu, day_index=np.array(days), n_days=len(slices))


def estimate_fou(y: RegularitySeries | np.ndarray) -> FouEstimate:
    """fOU parameters of a series sampled at unit time step.

    H from the whole-series second-difference ratio, eta from the lag-1 second
    differences, lambda from inverting the stationary variance. Gaps in a
    RegularitySeries are bridged: the days on either side are treated as adjacent.
    """
    values = np.asarray(y.values if isinstance(y, RegularitySeries) else y, dtype=float)
    big_r = values.size
    if big_r < MIN_FOU_SAMPLES:
        raise DataError(f"need at least {MIN_FOU_SAMPLES} values to estimate an fOU, got {big_r}")
    if isinstance(y, RegularitySeries):
        n_bridged = int(np.sum(np.diff(y.day_index) > 1))
        if n_bridged:
            logger.warning(
                "Bridging %d gap(s) in the regularity series: differences span dropped days", n_bridged
            )

    h_hat = local_hurst(values, max_window(big_r), big_r - 1)
    denom = 4.0 - 4.0**h_hat
    if denom <= 0:
        raise NumericalError(f"estimated H = {h_hat:.4f} >= 1 leaves eta undefined")
    dd = values[2:] - 2.0 * values[1:-1] + values[:-2]
    eta_hat = math.sqrt(np.sum(dd**2) / (big_r * denom))

    variance = float(np.var(values))
    if variance == 0.0:
        raise NumericalError("regularity series has zero variance")
    # H Gamma(2H) written as Gamma(2H+1)/2 so that slightly negative estimates pass through.
    half_gamma = special.gamma(2.0 * h_hat + 1.0) / 2.0
    if h_hat == 0.0 or not half_gamma > 0:
        raise NumericalError(f"estimated H = {h_hat:.4f} leaves lambda undefined")
    ratio = variance / (eta_hat**2 * half_gamma)
    lambda_hat = ratio ** (-1.0 / (2.0 * h_hat))
    if not (math.isfinite(lambda_hat) and lambda_hat > 0 and eta_hat > 0):
        raise NumericalError(f"non-positive or non-finite estimates (eta={eta_hat}, lambda={lambda_hat})")

    try:
        return FouEstimate(hurst_hat=h_hat, eta_hat=eta_hat, lambda_hat=lambda_hat, sample_size=big_r)
    except ValidationError as e:
        raise NumericalError(str(e)) from e


def regularity_stats(values) -> dict[str, float]:
    """Mean, standard deviation, skewness and (Pearson) kurtosis of a Hurst series."""
    values = np.asarray(values, dtype=float)
    return {
        "mean": float(np.mean(values)),
        "std": float(np.std(values, ddof=1)),
        "skewness": float(stats.skew(values)),
        "kurtosis": float(stats.kurtosis(values, fisher=False)),
    }


def bootstrap_fou_ci(
    y: RegularitySeries | np.ndarray,
    n_boot: int = 200,
    seed: SeedLike = None,
    level: float = 0.95,
) -> dict[str, tuple[float, float]]:
    """Percentile intervals for (H, eta, lambda) from a moving-block bootstrap.

    Blocks have length ceil(R^(1/3)); resamples whose estimation fails are skipped.
    """
    values = np.asarray(y.values if isinstance(y, RegularitySeries) else y, dtype=float)
    big_r = values.size
    block = max(1, math.ceil(big_r ** (1.0 / 3.0)))
    n_blocks = math.ceil(big_r / block)
    rng = np.random.default_rng(seed)

    draws = []
    for _ in range(n_boot):
        starts = rng.integers(0, big_r - block + 1, size=n_blocks)
        sample = np.concatenate([values[s : s + block] for s in starts])[:big_r]
        try:
            est = estimate_fou(sample)
        except FsrmError:
            continue
        draws.append((est.hurst_hat, est.eta_hat, est.lambda_hat))

    if len(draws) < max(2, n_boot // 2):
        raise NumericalError(f"only {len(draws)} of {n_boot} bootstrap resamples could be estimated")
    if len(draws) < n_boot:
        logger.warning("%d of %d bootstrap resamples failed and were skipped", n_boot - len(draws), n_boot)

    arr = np.array(draws)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(arr, [tail, 100.0 - tail], axis=0)
    return {
        name: (float(lo[j]), float(hi[j]))
        for j, name in enumerate(("hurst_hat", "eta_hat", "lambda_hat"))
    }
