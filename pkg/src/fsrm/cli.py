"""CLI entry point for fsrm."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml
from pydantic import ValidationError

from fsrm import __version__
from fsrm.analytics import correlation_curve, lag_min_table
from fsrm.config import DEFAULT_CONFIG, Config, RunConfig, grid_steps
from fsrm.dataio import ingest_csv, write_csv, write_json, write_path_csv, write_price_csv
from fsrm.errors import ConfigError, FsrmError
from fsrm.estimators import bootstrap_fou_ci, estimate_fou, hurst_series, regularity_stats
from fsrm.evaluation import evaluate, hit_rate
from fsrm.forecast import run_forecast
from fsrm.info import (
    optimal_lag_information,
    probability_surface,
    serial_info_surface,
    theoretical_serial_info_from_rho,
)
from fsrm.models import FouParams, FsrmConfig, SamplePath
from fsrm.pipeline import (
    EVALUATION_COLUMNS,
    EVALUATION_FIELDS,
    SIGNAL_COLUMNS,
    SIGNAL_FIELDS,
    field_rows,
    run_pipeline,
)
from fsrm.sim import gen_fbm, gen_fgn, gen_fou, gen_fsrm_prices

logger = logging.getLogger("fsrm.cli")


def parse_grid(text: str) -> np.ndarray:
    """'start:stop:step'; stop is included when it lies on the grid, never exceeded."""
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got '{text}'") from None
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"grid '{text}' needs step > 0 and stop >= start")
    n = grid_steps(start, stop, step)
    return np.round(start + step * np.arange(n + 1), 12)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file (default: ~/.config/fsrm/config.yaml)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("--tol", type=float, help="quadrature tolerance")
    common.add_argument("--out", help="output file (default: stdout)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", help="timestamp,price CSV (default: stdin)")
    data.add_argument("--r", type=int, help="observations per day (default: modal count)")

    parser = argparse.ArgumentParser(prog="fsrm", description="Fractional stochastic regularity model toolchain")
    parser.add_argument("--version", action="version", version=f"fsrm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate fGn, fBm, fOU or FSRM prices")
    p.add_argument("--kind", choices=["fsrm", "fou", "fgn", "fbm"], default="fsrm")
    p.add_argument("--H", dest="hurst", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--mean", type=float)
    p.add_argument("--days", type=int, help="days of FSRM prices")
    p.add_argument("--r", type=int, help="observations per day")
    p.add_argument("--n", type=int, help="points of an fgn/fbm/fou path (default: --days)")
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--scale-c", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("analyze", parents=[common], help="fOU autocorrelation minima or curves")
    p.add_argument("--H", dest="hurst", type=float, help="single Hurst exponent")
    p.add_argument("--grid-H", type=parse_grid, default="0.05:0.95:0.05")
    p.add_argument("--grid-s", type=parse_grid, help="s*lambda grid; emits correlation curves")
    p.add_argument("--s-max", type=float)
    p.add_argument("--step", type=float)

    p = sub.add_parser("surface", parents=[common], help="serial information or forecast probability grids")
    p.add_argument("--kind", choices=["info", "prob"], default="info")
    p.add_argument("--grid-H", type=parse_grid, default="0.05:0.95:0.05")
    p.add_argument("--grid-mlambda", type=parse_grid, default="0.01:10:0.01")
    p.add_argument("--grid-x", type=parse_grid, default="0:1:0.01")
    p.add_argument("--eta", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--m", type=float, default=1.0, help="time lag for --kind prob")

    p = sub.add_parser("estimate", parents=[common, data], help="daily Hurst series and fOU estimates")
    p.add_argument("--bootstrap", type=int, help="bootstrap resamples for intervals (0 disables)")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("forecast", parents=[common, data], help="filtered sign forecasts")
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--beta", type=float, default=0.7)

    for name, help_text in (("evaluate", "hit rates and tests over a beta grid"), ("run", "full pipeline")):
        p = sub.add_parser(name, parents=[common, data], help=help_text)
        p.add_argument("--tau", type=int, nargs="+")
        p.add_argument("--beta-min", type=float)
        p.add_argument("--beta-max", type=float)
        p.add_argument("--beta-step", type=float)
        p.add_argument("--eps-factor", type=float)
        p.add_argument("--bds-dim", type=int)
        p.add_argument("--seed", type=int)
        if name == "run":
            p.add_argument("--out-dir", type=Path)
            p.add_argument("--bootstrap", type=int)

    p = sub.add_parser("config", parents=[common], help="manage the config file")
    p.add_argument("action", choices=["init"])
    return parser


def _pick(value, default):
    return default if value is None else value


def _cmd_simulate(args, conf: Config) -> int:
    sim = conf.section("simulation")
    try:
        params = FouParams(
            hurst=_pick(args.hurst, sim["hurst"]),
            eta=_pick(args.eta, sim["eta"]),
            lambda_=_pick(args.lambda_, sim["lambda"]),
            mean=_pick(args.mean, sim["mean"]),
        )
    except ValidationError as e:
        raise ConfigError(f"invalid fOU parameters: {e}") from e
    seed = _pick(args.seed, sim["seed"])
    days = _pick(args.days, sim["days"])

    if args.kind == "fsrm":
        r = _pick(args.r, sim["obs_per_day"])
        try:
            cfg = FsrmConfig(fou=params, scale_c=_pick(args.scale_c, sim["scale_c"]), obs_per_day=r, days=days, seed=seed)
        except ValidationError as e:
            raise ConfigError(f"invalid simulation settings: {e}") from e
        log_prices, _ = gen_fsrm_prices(cfg)
        write_price_csv(args.out, log_prices, r)
        return 0

    n = _pick(args.n, days)
    scale = _pick(args.scale_c, 1.0)
    if args.kind == "fgn":
        path = SamplePath(values=gen_fgn(params.hurst, n, args.dt, scale, seed), dt=args.dt)
    elif args.kind == "fbm":
        path = gen_fbm(params.hurst, n, args.dt, scale, seed)
    else:
        path = gen_fou(params, n, args.dt, seed)
    write_path_csv(args.out, path)
    return 0


def _cmd_analyze(args, conf: Config) -> int:
    section = conf.section("analytics")
    tol = _pick(args.tol, conf.tol)
    hursts = [args.hurst] if args.hurst is not None else args.grid_H

    if args.grid_s is not None:
        rows = []
        for h in hursts:
            curve = correlation_curve(h, args.grid_s, tol)
            rows.extend((h, sl, rho) for sl, rho in zip(curve.product_grid, curve.rho))
        write_csv(args.out, ["H", "slambda", "rho"], rows)
        return 0

    s_max = _pick(args.s_max, section["s_max"])
    step = _pick(args.step, section["step"])
    table = lag_min_table(hursts, s_max, step, tol)
    write_csv(
        args.out,
        ["H", "s_star", "rho_min", "info_at_s_star"],
        ((h, lag.s_star, lag.rho_min, theoretical_serial_info_from_rho(lag.rho_min)) for h, lag in table),
    )
    deepest_h, deepest = min(table, key=lambda item: item[1].rho_min)
    logger.info("Deepest minimum rho=%.4f at H=%.2f, s*=%.3f", deepest.rho_min, deepest_h, deepest.s_star)
    return 0


def _cmd_surface(args, conf: Config) -> int:
    tol = _pick(args.tol, conf.tol)
    if args.kind == "info":
        rows = serial_info_surface(args.grid_H, args.grid_mlambda, tol)
        write_csv(args.out, ["H", "mlambda", "info"], rows)
        return 0

    sim = conf.section("simulation")
    eta = _pick(args.eta, sim["eta"])
    lambda_ = _pick(args.lambda_, sim["lambda"])
    params_list = [FouParams.of(h, eta, lambda_) for h in args.grid_H]
    rows = probability_surface(args.grid_x, params_list, args.m, tol)
    write_csv(args.out, ["x", "H", "eta", "lambda", "prob"], rows)
    return 0


def _cmd_estimate(args, conf: Config) -> int:
    log_prices, _, r = ingest_csv(args.input, args.r)
    regularity = hurst_series(log_prices, r)
    estimate = estimate_fou(regularity)
    n_boot = _pick(args.bootstrap, conf.section("evaluation")["bootstrap_samples"])
    ci = bootstrap_fou_ci(regularity, n_boot, seed=_pick(args.seed, conf.seed)) if n_boot > 0 else None
    h_opt = estimate.hurst_hat if 0.0 < estimate.hurst_hat < 1.0 else None
    write_json(
        args.out,
        {
            **estimate.model_dump(),
            "ci_95": ci,
            "R": regularity.n_days,
            "r": r,
            "nu": regularity.nu,
            "regularity": regularity_stats(regularity.values),
            "gaps": regularity.gaps,
            "optimal_lag": optimal_lag_information(h_opt, tol=_pick(args.tol, conf.tol)) if h_opt else None,
        },
    )
    return 0


def _run_config(args, conf: Config, **extra) -> RunConfig:
    overrides = {
        "input": getattr(args, "input", None),
        "r": getattr(args, "r", None),
        "tol": args.tol,
        "seed": getattr(args, "seed", None),
        "eps_factor": getattr(args, "eps_factor", None),
        "bds_dim": getattr(args, "bds_dim", None),
        "beta_min": getattr(args, "beta_min", None),
        "beta_max": getattr(args, "beta_max", None),
        "beta_step": getattr(args, "beta_step", None),
        "bootstrap_samples": getattr(args, "bootstrap", None),
        "out_dir": getattr(args, "out_dir", None),
    }
    overrides.update(extra)
    return RunConfig.resolve(conf, **overrides)


def _cmd_forecast(args, conf: Config) -> int:
    cfg = _run_config(args, conf, tau=[args.tau], beta_min=args.beta, beta_max=args.beta)
    log_prices, closes, r = ingest_csv(cfg.input, cfg.r)
    signals = run_forecast(log_prices, r, args.tau, args.beta, closes, cfg.tol)
    write_csv(args.out, SIGNAL_COLUMNS, field_rows(signals, SIGNAL_FIELDS))
    try:
        rate, n_active = hit_rate([s.predicted_sign for s in signals], [s.realized_sign for s in signals])
        logger.info("Hit rate %.4f over %d active days of %d", rate, n_active, len(signals))
    except FsrmError as e:
        logger.warning("%s", e)
    return 0


def _cmd_evaluate(args, conf: Config) -> int:
    cfg = _run_config(args, conf, tau=args.tau)
    log_prices, closes, r = ingest_csv(cfg.input, cfg.r)
    reports = evaluate(log_prices, closes, r, cfg.tau, cfg.beta_grid, cfg.eps_factor, cfg.bds_dim, cfg.tol)
    write_csv(args.out, EVALUATION_COLUMNS, field_rows(reports, EVALUATION_FIELDS))
    return 0


def _cmd_run(args, conf: Config) -> int:
    return run_pipeline(_run_config(args, conf, tau=args.tau))


def _cmd_config(args, conf: Config) -> int:
    if args.config is None:
        conf.ensure_config_file()
        return 0
    if args.config.exists():
        logger.info("Config file %s already exists", args.config)
        return 0
    args.config.parent.mkdir(parents=True, exist_ok=True)
    with open(args.config, "w") as f:
        yaml.dump(DEFAULT_CONFIG, f, default_flow_style=False)
    logger.info(f"Created default config at {args.config}")
    return 0


COMMANDS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "surface": _cmd_surface,
    "estimate": _cmd_estimate,
    "forecast": _cmd_forecast,
    "evaluate": _cmd_evaluate,
    "run": _cmd_run,
    "config": _cmd_config,
}


def main(argv: list[str] | None = None) -> int:
    """Main entry point; returns the process exit status."""
    args = _build_parser().parse_args(argv)

    try:
        # `config init --config PATH` creates PATH, so it is not read first.
        creating = args.command == "config" and args.config is not None
        conf = Config(None if creating else args.config)
    except ConfigError as e:
        logging.basicConfig(level=logging.INFO)
        logger.error("%s", e)
        return e.exit_code

    level = "DEBUG" if args.verbose else conf.log_level
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        datefmt="%H:%M:%S",
    )

    try:
        return COMMANDS[args.command](args, conf)
    except FsrmError as e:
        logger.error("%s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
