"""Filtered sign-of-return forecasts driven by the estimated regularity process.

Steps: daily Hurst estimates; fOU fit on the first half of the days; probability
that the normalised regularity tau days ahead exceeds 1/2 for every day of the
second half; a beta band turning the probability into a ternary state; the
predicted sign is the previous daily sign times that state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from fsrm.analytics import DEFAULT_TOL
from fsrm.errors import ConfigError, DataError
from fsrm.estimators import estimate_fou, hurst_series
from fsrm.info import conditional_prob_up_normalized, normalize_hurst
from fsrm.models import FouEstimate, FouParams, ForecastSignal, RegularitySeries, SamplePath
from fsrm.sim import daily_closes

logger = logging.getLogger("fsrm.forecast")

MIN_DAYS_PER_HALF = 2


def filter_state(prob: float, beta: float) -> int:
    """+1 above beta, -1 below 1 - beta, 0 inside the band."""
    if not 0.5 <= beta <= 1.0:
        raise ConfigError(f"beta must lie in [1/2, 1], got {beta}")
    if prob > beta:
        return 1
    if prob < 1.0 - beta:
        return -1
    return 0


@dataclass(frozen=True)
class ForecastFrame:
    """Beta-independent part of a forecast: per-day probabilities and signs."""

    tau: int
    estimate: FouEstimate
    params: FouParams
    regularity: RegularitySeries
    estimation_days: np.ndarray
    days: np.ndarray
    h_hat: np.ndarray
    prob_up: np.ndarray
    past_sign: np.ndarray
    realized_sign: np.ndarray


def forecast_probabilities(
    log_prices: SamplePath,
    r: int,
    tau: int,
    closes: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
) -> ForecastFrame:
    if tau < 1:
        raise ConfigError(f"tau must be at least 1, got {tau}")

    regularity = hurst_series(log_prices, r)
    n_days = regularity.n_days
    closes = daily_closes(log_prices, r) if closes is None else np.asarray(closes, dtype=float)
    if closes.size < n_days:
        raise DataError(f"{closes.size} daily closes for {n_days} days of intraday data")

    half = n_days // 2
    first = regularity.select(0, half)
    second = regularity.select(half, n_days - tau)
    if half < MIN_DAYS_PER_HALF or n_days - tau - half < MIN_DAYS_PER_HALF:
        raise DataError(f"{n_days} days leave fewer than {MIN_DAYS_PER_HALF} days per half at tau={tau}")
    if len(second) == 0:
        raise DataError("every evaluation day is degenerate")

    estimate = estimate_fou(first)
    logger.info(
        "fOU estimate on %d days: H=%.4f eta=%.4f lambda=%.4f",
        estimate.sample_size,
        estimate.hurst_hat,
        estimate.eta_hat,
        estimate.lambda_hat,
    )
    hurst = estimate.hurst_hat
    if not 0.0 < hurst < 1.0:
        hurst = normalize_hurst(hurst)
        logger.warning("Estimated H = %.4f outside (0, 1); using normalised %.4f", estimate.hurst_hat, hurst)
    params = FouParams.of(hurst, estimate.eta_hat, estimate.lambda_hat)

    mlambda = tau * estimate.lambda_hat
    prob = np.array(
        [conditional_prob_up_normalized(x, params, mlambda, tol) for x in normalize_hurst(second.values)]
    )
    days = second.day_index
    past = np.sign(closes[days] - closes[days - 1]).astype(int)
    realized = np.sign(closes[days + tau] - closes[days]).astype(int)
    return ForecastFrame(
        tau=tau,
        estimate=estimate,
        params=params,
        regularity=regularity,
        estimation_days=first.day_index,
        days=days,
        h_hat=second.values,
        prob_up=prob,
        past_sign=past,
        realized_sign=realized,
    )


def apply_filter(frame: ForecastFrame, beta: float) -> list[ForecastSignal]:
    signals = []
    for day, prob, past, realized in zip(frame.days, frame.prob_up, frame.past_sign, frame.realized_sign):
        state = filter_state(prob, beta)
        signals.append(
            ForecastSignal(
                day=int(day),
                prob_up=float(prob),
                state=state,
                past_sign=int(past),
                predicted_sign=int(past) * state,
                realized_sign=int(realized),
            )
        )
    return signals


def run_forecast(
    log_prices: SamplePath,
    r: int,
    tau: int,
    beta: float,
    closes: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
) -> list[ForecastSignal]:
    """One signal per evaluation day i in [R/2, R - tau), days indexed from 0."""
    return apply_filter(forecast_probabilities(log_prices, r, tau, closes, tol), beta)
