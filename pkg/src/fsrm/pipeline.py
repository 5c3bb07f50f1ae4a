"""End-to-end run: ingest, estimate, forecast, evaluate, write artifacts and a manifest."""

from __future__ import annotations

import contextlib
import io
import logging
import sys

from fsrm import __version__
from fsrm.config import RunConfig
from fsrm.dataio import ingest_csv, sha256_digest, write_csv, write_json
from fsrm.errors import DataError, FsrmError, PipelineError
from fsrm.estimators import bootstrap_fou_ci, regularity_stats
from fsrm.evaluation import evaluate_frame
from fsrm.forecast import apply_filter, forecast_probabilities
from fsrm.lock import output_lock

logger = logging.getLogger("fsrm.pipeline")

ESTIMATE_FILE = "estimate.json"
FORECAST_FILE = "forecast.csv"
EVALUATION_FILE = "evaluation.csv"
MANIFEST_FILE = "manifest.json"

# CSV header -> attribute of ForecastSignal / EvaluationReport
SIGNAL_FIELDS = {
    "day": "day",
    "prob": "prob_up",
    "state": "state",
    "past_sign": "past_sign",
    "pred": "predicted_sign",
    "realized": "realized_sign",
}
EVALUATION_FIELDS = {
    "tau": "tau",
    "beta": "beta",
    "hit_rate": "hit_rate",
    "n_active": "n_active",
    "binom_p": "binom_pvalue",
    "bds_p": "bds_pvalue",
    "hits": "hits",
    "bds_p_m2": "bds_pvalue_m2",
    "skipped": "skipped",
}
SIGNAL_COLUMNS = list(SIGNAL_FIELDS)
EVALUATION_COLUMNS = list(EVALUATION_FIELDS)
FORECAST_COLUMNS = ["tau", "beta", *SIGNAL_COLUMNS, "h_hat"]


def field_rows(items, fields: dict[str, str]):
    """One tuple per item, attributes taken in CSV column order."""
    return (tuple(getattr(item, attr) for attr in fields.values()) for item in items)


def _forecast_rows(frames, beta_grid):
    for frame in frames:
        for beta in beta_grid:
            for signal, h in zip(apply_filter(frame, beta), frame.h_hat):
                yield (frame.tau, beta, *(getattr(signal, a) for a in SIGNAL_FIELDS.values()), h)


@contextlib.contextmanager
def _stage(name: str):
    logger.info("Stage: %s", name)
    try:
        yield
    except PipelineError:
        raise
    except FsrmError as e:
        raise PipelineError(name, e) from e


def _read_input(cfg: RunConfig) -> tuple[str, str]:
    if cfg.input is None or str(cfg.input) == "-":
        return sys.stdin.read(), "<stdin>"
    if not cfg.input.exists():
        raise DataError(f"input file not found: {cfg.input}")
    return cfg.input.read_text(), str(cfg.input)


def run_pipeline(cfg: RunConfig) -> int:
    """Write estimate, forecast, evaluation and manifest files into cfg.out_dir.

    Every module error is re-raised as a PipelineError naming the stage.
    """
    out = cfg.out_dir
    with output_lock(out):
        with _stage("ingest"):
            text, input_name = _read_input(cfg)
            log_prices, closes, r = ingest_csv(io.StringIO(text), cfg.r)

        with _stage("forecast"):
            frames = [forecast_probabilities(log_prices, r, tau, closes, cfg.tol) for tau in cfg.tau]

        head = frames[0]
        with _stage("estimate"):
            half = head.regularity.n_days // 2
            first_half = head.regularity.select(0, half)
            ci = None
            if cfg.bootstrap_samples > 0:
                ci = bootstrap_fou_ci(first_half, cfg.bootstrap_samples, seed=cfg.seed)
            estimate = {
                **head.estimate.model_dump(),
                "ci_95": ci,
                "params_used": head.params.model_dump(by_alias=True),
                "R": head.regularity.n_days,
                "r": r,
                "nu": head.regularity.nu,
                "estimation_days": [0, half],
                "regularity": regularity_stats(head.regularity.values),
                "gaps": head.regularity.gaps,
            }

        with _stage("evaluate"):
            reports = [
                report
                for frame in frames
                for report in evaluate_frame(frame, cfg.beta_grid, cfg.eps_factor, cfg.bds_dim)
            ]

        with _stage("write"):
            write_json(out / ESTIMATE_FILE, estimate)
            write_csv(
                out / FORECAST_FILE,
                FORECAST_COLUMNS,
                _forecast_rows(frames, cfg.beta_grid),
            )
            write_csv(
                out / EVALUATION_FILE,
                EVALUATION_COLUMNS,
                field_rows(reports, EVALUATION_FIELDS),
            )
            outputs = {name: sha256_digest(out / name) for name in (ESTIMATE_FILE, FORECAST_FILE, EVALUATION_FILE)}
            write_json(
                out / MANIFEST_FILE,
                {
                    "version": __version__,
                    "seed": cfg.seed,
                    "input": {"name": input_name, "sha256": sha256_digest(text.encode())},
                    "config": cfg.model_dump(mode="json"),
                    "outputs": outputs,
                },
            )

    best = max((rep for rep in reports if not rep.skipped), key=lambda rep: rep.hit_rate, default=None)
    if best is not None:
        logger.info("Best cell: tau=%d beta=%.2f hit rate %.4f over %d days", best.tau, best.beta, best.hit_rate, best.n_active)
    logger.info("Wrote %s", out)
    return 0
