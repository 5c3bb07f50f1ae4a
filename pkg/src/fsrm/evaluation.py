"""Forecast evaluation: hit rate, exact binomial test, BDS independence test."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats
from statsmodels.tsa.stattools import bds

from fsrm.analytics import DEFAULT_TOL
from fsrm.errors import ConfigError, DataError, NumericalError, UndefinedRateError
from fsrm.forecast import ForecastFrame, apply_filter, forecast_probabilities
from fsrm.models import EvaluationReport, SamplePath

logger = logging.getLogger("fsrm.evaluation")

BDS_MIN_LENGTH = 50


def hit_rate(predicted_signs, realized_signs) -> tuple[float, int]:
    """Fraction of active (nonzero) predictions matching the realised sign.

    Realised signs are aligned with predictions, i.e. already taken tau days ahead.
    A zero realised increment is a miss.
    """
    predicted = np.asarray(predicted_signs, dtype=int)
    realized = np.asarray(realized_signs, dtype=int)
    if predicted.shape != realized.shape:
        raise DataError("predicted and realised signs must be aligned")
    active = predicted != 0
    n_active = int(active.sum())
    if n_active == 0:
        raise UndefinedRateError("no active prediction; hit rate undefined")
    hits = int(np.sum(predicted[active] == realized[active]))
    return hits / n_active, n_active


def binomial_test(hits: int, n: int) -> float:
    """One-sided p-value of `hits` successes in n fair trials: P(X >= hits)."""
    if n < 1 or not 0 <= hits <= n:
        raise ConfigError(f"need 0 <= hits <= n and n >= 1, got hits={hits}, n={n}")
    return float(stats.binomtest(hits, n, 0.5, alternative="greater").pvalue)


@dataclass(frozen=True)
class BdsResult:
    """BDS statistics and two-sided p-values for embedding dimensions 2..dim."""

    dim: int
    epsilon: float
    statistics: dict[int, float]
    pvalues: dict[int, float]

    @property
    def pvalue(self) -> float:
        return self.pvalues[self.dim]


def bds_test(series, dim: int = 3, eps_factor: float = 1.0) -> BdsResult:
    """BDS test of the i.i.d. hypothesis with radius eps_factor * sample std.

    Statistics and two-sided p-values come from ``statsmodels.tsa.stattools.bds``;
    this wrapper validates inputs and rejects degenerate series it would turn into NaN.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if dim < 2:
        raise ConfigError(f"embedding dimension must be at least 2, got {dim}")
    if n < BDS_MIN_LENGTH or dim >= n:
        raise DataError(f"BDS test needs at least {BDS_MIN_LENGTH} observations, got {n}")
    if not eps_factor > 0:
        raise ConfigError(f"eps_factor must be positive, got {eps_factor}")

    epsilon = eps_factor * float(np.std(x, ddof=1))
    if not epsilon > 0:
        raise NumericalError("constant series: BDS radius is zero")

    with np.errstate(divide="ignore", invalid="ignore"):
        raw_stats, raw_pvalues = bds(x, max_dim=dim, epsilon=epsilon)
    raw_stats, raw_pvalues = np.atleast_1d(raw_stats), np.atleast_1d(raw_pvalues)
    if not (np.all(np.isfinite(raw_stats)) and np.all(np.isfinite(raw_pvalues))):
        raise NumericalError(f"degenerate BDS statistic at epsilon={epsilon:.4g}")

    dims = range(2, dim + 1)
    statistics = {m: float(s) for m, s in zip(dims, raw_stats)}
    pvalues = {m: float(p) for m, p in zip(dims, raw_pvalues)}
    return BdsResult(dim=dim, epsilon=epsilon, statistics=statistics, pvalues=pvalues)


def _bds_pvalues(hits: np.ndarray, dim: int, eps_factor: float) -> tuple[float | None, float | None]:
    if hits.size < BDS_MIN_LENGTH:
        return None, None
    try:
        res = bds_test(hits, dim, eps_factor)
    except (NumericalError, DataError) as e:
        logger.debug("BDS test skipped: %s", e)
        return None, None
    return res.pvalue, res.pvalues.get(2)


def evaluate_frame(
    frame: ForecastFrame,
    beta_grid,
    eps_factor: float = 1.0,
    bds_dim: int = 3,
) -> list[EvaluationReport]:
    """Reports for every beta of the grid on one forecast horizon."""
    reports = []
    for beta in beta_grid:
        signals = apply_filter(frame, beta)
        predicted = np.array([s.predicted_sign for s in signals], dtype=int)
        realized = np.array([s.realized_sign for s in signals], dtype=int)
        try:
            rate, n_active = hit_rate(predicted, realized)
        except UndefinedRateError:
            logger.info("tau=%d beta=%.3f: no active prediction, cell skipped", frame.tau, beta)
            reports.append(EvaluationReport(tau=frame.tau, beta=beta, skipped=True))
            continue

        active = predicted != 0
        hits = (predicted[active] == realized[active]).astype(float)
        n_hits = int(hits.sum())
        bds_p, bds_p2 = _bds_pvalues(hits, bds_dim, eps_factor)
        reports.append(
            EvaluationReport(
                tau=frame.tau,
                beta=beta,
                hit_rate=rate,
                n_active=n_active,
                hits=n_hits,
                binom_pvalue=binomial_test(n_hits, n_active),
                bds_pvalue=bds_p,
                bds_pvalue_m2=bds_p2,
            )
        )
    return reports


def evaluate(
    log_prices: SamplePath,
    daily_closes: np.ndarray | None,
    r: int,
    taus,
    beta_grid,
    eps_factor: float = 1.0,
    bds_dim: int = 3,
    tol: float = DEFAULT_TOL,
) -> list[EvaluationReport]:
    """One report per (tau, beta); cells without an active prediction are marked skipped."""
    if any(not 0.5 <= b <= 1.0 for b in beta_grid):
        raise ConfigError("beta grid must lie within [1/2, 1]")

    reports = []
    for tau in taus:
        frame = forecast_probabilities(log_prices, r, tau, daily_closes, tol)
        reports.extend(evaluate_frame(frame, beta_grid, eps_factor, bds_dim))
    return reports
