import math

import numpy as np
import pytest
from statsmodels.tsa.stattools import bds

from fsrm.errors import ConfigError, DataError, FsrmError, NumericalError, UndefinedRateError
from fsrm.evaluation import binomial_test, bds_test, evaluate, evaluate_frame, hit_rate
from fsrm.forecast import forecast_probabilities
from fsrm.models import FouParams, FsrmConfig, SamplePath
from fsrm.sim import derive_rng, gen_fbm, gen_fsrm_prices, spawn_seeds

from conftest import OSC_R


def test_hit_rate_counts_active_only():
    rate, n_active = hit_rate([1, 0, -1, 1, 0], [1, 1, 1, -1, -1])
    assert n_active == 3
    assert rate == pytest.approx(1 / 3)


def test_zero_realized_sign_is_a_miss():
    rate, n_active = hit_rate([1, -1], [0, -1])
    assert (rate, n_active) == (0.5, 2)


def test_hit_rate_errors():
    with pytest.raises(UndefinedRateError):
        hit_rate([0, 0], [1, -1])
    with pytest.raises(DataError):
        hit_rate([1, 0], [1])


@pytest.mark.parametrize("n", [1, 5, 20, 64])
def test_binomial_test_matches_tail_sum(n):
    for hits in range(n + 1):
        tail = sum(math.comb(n, k) for k in range(hits, n + 1)) / 2**n
        assert binomial_test(hits, n) == pytest.approx(tail, rel=1e-9)


@pytest.mark.parametrize("hits, n", [(-1, 5), (6, 5), (0, 0)])
def test_binomial_test_rejects(hits, n):
    with pytest.raises(ConfigError):
        binomial_test(hits, n)


def test_bds_accepts_iid():
    res = bds_test(derive_rng(31, 0).standard_normal(500))
    assert set(res.pvalues) == {2, 3}
    assert res.pvalue == res.pvalues[3]
    assert res.pvalue > 1e-4


def test_bds_matches_statsmodels_reference():
    x = derive_rng(33, 0).standard_normal(300)
    res = bds_test(x, dim=4, eps_factor=1.5)
    ref_stats, ref_pvalues = bds(x, max_dim=4, distance=1.5)
    assert res.epsilon == pytest.approx(1.5 * np.std(x, ddof=1))
    np.testing.assert_allclose([res.statistics[m] for m in (2, 3, 4)], ref_stats, rtol=1e-12)
    np.testing.assert_allclose([res.pvalues[m] for m in (2, 3, 4)], ref_pvalues, rtol=1e-12)


def test_bds_on_binary_hits():
    hits = (derive_rng(34, 0).uniform(size=200) < 0.6).astype(float)
    res = bds_test(hits, dim=3)
    assert set(res.pvalues) == {2, 3}
    assert all(0.0 <= p <= 1.0 for p in res.pvalues.values())


def test_bds_rejects_logistic_map():
    x = np.empty(500)
    x[0] = 0.3
    for i in range(1, x.size):
        x[i] = 4.0 * x[i - 1] * (1.0 - x[i - 1])
    assert bds_test(x, dim=2).pvalue < 0.01


def test_bds_errors():
    with pytest.raises(DataError):
        bds_test(np.arange(10.0))
    with pytest.raises(ConfigError):
        bds_test(np.arange(100.0), dim=1)
    with pytest.raises(ConfigError):
        bds_test(np.arange(100.0), eps_factor=0.0)
    with pytest.raises(NumericalError):
        bds_test(np.ones(100))


def test_evaluate_frame_marks_empty_cells(oscillating_path):
    frame = forecast_probabilities(oscillating_path, OSC_R, tau=1)
    reports = evaluate_frame(frame, [0.5, 1.0])
    assert [r.beta for r in reports] == [0.5, 1.0]
    assert reports[1].skipped and reports[1].hit_rate is None
    first = reports[0]
    assert not first.skipped
    assert first.hits == round(first.hit_rate * first.n_active)
    assert 0.0 <= first.binom_pvalue <= 1.0


def test_evaluate_grid(oscillating_path):
    reports = evaluate(oscillating_path, None, OSC_R, [1, 2], [0.5, 0.75, 1.0])
    assert [(r.tau, r.beta) for r in reports] == [(t, b) for t in (1, 2) for b in (0.5, 0.75, 1.0)]
    with pytest.raises(ConfigError):
        evaluate(oscillating_path, None, OSC_R, [1], [0.4])


def test_n_active_non_increasing_in_beta(oscillating_path):
    frame = forecast_probabilities(oscillating_path, OSC_R, tau=1)
    reports = evaluate_frame(frame, np.linspace(0.5, 1.0, 26))
    counts = [0 if r.skipped else r.n_active for r in reports]
    assert counts[0] > 0
    assert all(later <= earlier for earlier, later in zip(counts, counts[1:]))


def test_evaluation_unchanged_by_reflected_prices(oscillating_path):
    reflected = SamplePath(values=-oscillating_path.values, dt=oscillating_path.dt)
    grid = [0.5, 0.55, 0.6]
    assert evaluate(reflected, None, OSC_R, [1, 2], grid) == evaluate(oscillating_path, None, OSC_R, [1, 2], grid)


@pytest.mark.slow
def test_bds_size_under_null():
    rejections = sum(
        bds_test(np.random.default_rng(s).standard_normal(1000)).pvalue < 0.05 for s in spawn_seeds(41, 1000)
    )
    assert 0.03 <= rejections / 1000 <= 0.07


@pytest.mark.slow
def test_bds_power_on_logistic_maps():
    rejections = 0
    for s in spawn_seeds(42, 500):
        x = np.empty(500)
        x[0] = np.random.default_rng(s).uniform(0.05, 0.95)
        for i in range(1, x.size):
            x[i] = 4.0 * x[i - 1] * (1.0 - x[i - 1])
        rejections += bds_test(x, dim=2).pvalue < 0.01
    assert rejections >= 490


TRADING_MINUTES = 391


def _edge_found(log_prices):
    (report,) = evaluate(log_prices, None, TRADING_MINUTES, [1], [0.7])
    return not report.skipped and report.hit_rate > 0.5 and report.binom_pvalue < 0.05


@pytest.mark.slow
def test_forecast_edge_on_synthetic_fsrm():
    params = FouParams.of(0.8, 0.05, 0.05, mean=0.6)
    found = 0
    for seed in range(50):
        cfg = FsrmConfig(fou=params, obs_per_day=TRADING_MINUTES, days=2000, seed=seed)
        log_prices, _ = gen_fsrm_prices(cfg)
        found += _edge_found(log_prices)
    assert found >= 40


@pytest.mark.slow
def test_no_forecast_edge_on_brownian_prices():
    found = 0
    for s in spawn_seeds(43, 100):
        path = gen_fbm(0.5, TRADING_MINUTES * 2000, dt=1 / TRADING_MINUTES, scale_c=0.01, seed=s)
        try:
            found += _edge_found(path)
        except FsrmError:
            # a series the fOU fit cannot describe yields no forecast at all
            continue
    assert found <= 10
