"""Shannon-entropy measures of serial dependence and the forecast probability of the fOU.

All entropies are in bits.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special, stats

from fsrm.analytics import DEFAULT_TOL, fou_autocorrelation, fou_variance, min_autocorrelation
from fsrm.errors import ConfigError, DataError, NumericalError
from fsrm.models import BinarySeries, FouParams, SerialInfoResult, WordDistribution

logger = logging.getLogger("fsrm.info")

RHO_LIMIT = 1.0 - 1e-12
PROB_FLOOR = 1e-300
_PROB_MIN = np.finfo(float).tiny
_PROB_MAX = np.nextafter(1.0, 0.0)


def normalize_hurst(h):
    """1/2 + arctan(h - 1/2) / pi: a monotone bijection of the real line onto (0, 1)."""
    out = 0.5 + np.arctan(np.asarray(h, dtype=float) - 0.5) / np.pi
    return float(out) if np.ndim(out) == 0 else out


def denormalize_hurst(h_tilde):
    """Inverse of normalize_hurst: 1/2 + tan(pi (h_tilde - 1/2))."""
    h_tilde = np.asarray(h_tilde, dtype=float)
    if np.any((h_tilde <= 0.0) | (h_tilde >= 1.0)):
        raise ConfigError("normalised regularity must lie in (0, 1)")
    out = 0.5 + np.tan(np.pi * (h_tilde - 0.5))
    return float(out) if np.ndim(out) == 0 else out


def binarize_regularity(series, threshold: float = 0.5, source_lag: float = 1.0) -> BinarySeries:
    """1 where the value is strictly above the threshold, else 0."""
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise DataError("cannot binarize an empty series")
    return BinarySeries(symbols=(values > threshold).astype(np.int8), source_lag=source_lag)


def _word_codes(symbols: np.ndarray, length: int) -> np.ndarray:
    """Integer code of every sliding word of ``length`` symbols (first symbol most significant)."""
    windows = sliding_window_view(symbols.astype(np.int64), length)
    weights = 1 << np.arange(length - 1, -1, -1)
    return windows @ weights


def word_distribution(b: BinarySeries, L: int) -> WordDistribution:
    """Plug-in frequencies of the overlapping words of length L."""
    if L < 1:
        raise ConfigError(f"word length must be at least 1, got {L}")
    if len(b) < L:
        raise DataError(f"series of length {len(b)} has no word of length {L}")
    counts = np.bincount(_word_codes(b.symbols, L), minlength=2**L)
    return WordDistribution(word_length=L, probs=counts / counts.sum())


def shannon_entropy(dist: WordDistribution) -> float:
    """-sum p log2 p with 0 log 0 = 0."""
    return float(stats.entropy(dist.probs, base=2))


def block_entropy(b: BinarySeries, L: int) -> float:
    return shannon_entropy(word_distribution(b, L))


def conditional_entropy(b: BinarySeries, L: int) -> float:
    """Entropy of the next symbol given the previous L, estimated from (L+1)-words.

    Contexts never observed carry zero weight.
    """
    if len(b) < L + 1:
        raise DataError(f"series of length {len(b)} is shorter than L+1 = {L + 1}")
    counts = np.bincount(_word_codes(b.symbols, L + 1), minlength=2 ** (L + 1)).reshape(-1, 2)
    context_counts = counts.sum(axis=1)
    seen = context_counts > 0
    weights = context_counts[seen] / context_counts.sum()
    per_context = stats.entropy(counts[seen], base=2, axis=1)
    return float(np.dot(weights, per_context))


def empirical_serial_information(b: BinarySeries, L: int = 1) -> SerialInfoResult:
    """1 minus the plug-in conditional entropy of the next symbol given L past symbols."""
    if L < 1:
        raise ConfigError(f"L must be at least 1, got {L}")
    h_cond = conditional_entropy(b, L)
    info = float(np.clip(1.0 - h_cond, 0.0, 1.0))
    return SerialInfoResult(info=info, L=L, n_words=len(b) - L)


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, PROB_FLOOR, 1.0)
    return special.xlogy(p, p) / math.log(2.0)


def binary_transition_probs(rho: float, via_arcsin: bool = True) -> tuple[float, float]:
    """(P(up | previous down), P(up | previous up)) for a Gaussian pair with correlation rho.

    Both symbols are taken relative to the common mean: 1/2 -+ a/pi with
    a = arctan(rho / sqrt(1 - rho^2)) = arcsin(rho).
    """
    if abs(rho) > 1.0:
        raise NumericalError(f"correlation {rho} outside [-1, 1]")
    rho = float(np.clip(rho, -RHO_LIMIT, RHO_LIMIT))
    if via_arcsin:
        angle = math.asin(rho)
    else:
        angle = math.atan(rho / math.sqrt(1.0 - rho * rho))
    return 0.5 - angle / math.pi, 0.5 + angle / math.pi


def theoretical_serial_info_from_rho(rho: float, via_arcsin: bool = True) -> float:
    """Serial information (L = 1) of a Gaussian process binarised at its mean, given lag correlation rho.

    1 + f(p_01) + f(p_11), f(x) = x log2 x, with the transition probabilities of
    binary_transition_probs.
    """
    probs = np.array(binary_transition_probs(rho, via_arcsin))
    info = 1.0 + float(_xlog2x(probs).sum())
    return float(np.clip(info, 0.0, 1.0))


def theoretical_serial_info(hurst: float, mlambda: float, tol: float = DEFAULT_TOL) -> float:
    """Serial information of the binarised fOU at time scale m, a function of H and m*lambda."""
    if not mlambda > 0:
        raise ConfigError(f"m*lambda must be positive, got {mlambda}")
    return theoretical_serial_info_from_rho(fou_autocorrelation(hurst, mlambda, tol))


def optimal_lag_information(
    hurst: float, s_max: float = 10.0, step: float = 0.01, tol: float = DEFAULT_TOL
) -> tuple[float, float]:
    """(s*, information) at the lag minimising the autocorrelation with lambda = 1."""
    lag = min_autocorrelation(hurst, s_max, step, tol)
    return lag.s_star, theoretical_serial_info_from_rho(lag.rho_min)


def conditional_prob_up(
    x: float, params: FouParams, mlambda: float, tol: float = DEFAULT_TOL
) -> float:
    """P(Y_{t+m} > 1/2 | Y_t = x) for the stationary fOU with the given parameters.

    With rho the lag-m autocorrelation and sigma^2 the stationary variance,
    Y_{t+m} | Y_t = x is Gaussian with mean mean + rho (x - mean) and variance
    sigma^2 (1 - rho^2).
    """
    if not mlambda > 0:
        raise ConfigError(f"m*lambda must be positive, got {mlambda}")
    rho = fou_autocorrelation(params.hurst, mlambda, tol)
    if abs(rho) >= RHO_LIMIT:
        raise NumericalError(f"autocorrelation {rho} too close to +-1 for a conditional law")
    if rho == 0.0:
        return 0.5

    sigma = math.sqrt(fou_variance(params))
    centre = params.mean + rho * (x - params.mean)
    z = (centre - 0.5) / (sigma * math.sqrt(1.0 - rho * rho))
    return float(np.clip(stats.norm.cdf(z), _PROB_MIN, _PROB_MAX))


def conditional_prob_up_normalized(
    x_tilde: float, params: FouParams, mlambda: float, tol: float = DEFAULT_TOL
) -> float:
    """conditional_prob_up evaluated at the de-normalised level 1/2 + tan(pi (x_tilde - 1/2))."""
    return conditional_prob_up(denormalize_hurst(x_tilde), params, mlambda, tol)


def serial_info_surface(hurst_grid, mlambda_grid, tol: float = DEFAULT_TOL):
    """Rows (H, m*lambda, information) over the product grid."""
    return [
        (float(h), float(ml), theoretical_serial_info(h, ml, tol))
        for h in hurst_grid
        for ml in mlambda_grid
    ]


def probability_surface(x_grid, params_list, m: float = 1.0, tol: float = DEFAULT_TOL):
    """Rows (x, H, eta, lambda, probability) for each parameter set at time lag m."""
    rows = []
    for params in params_list:
        for x in x_grid:
            p = conditional_prob_up(float(x), params, m * params.lambda_, tol)
            rows.append((float(x), params.hurst, params.eta, params.lambda_, p))
    return rows
