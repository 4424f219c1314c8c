#!/usr/bin/env python3
"""
Command-line entry point for the decomposition-ensemble forecasting toolkit

Subcommands: ingest, decompose, fit, forecast, benchmark, synth, stats.
Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from config import Config, RunConfig, load_run_config
from ensemble import (
    MODEL_KINDS,
    AdaEnsembleForecaster,
    fit_forecaster,
    forecast_adaensemble,
    load_forecaster,
    save_forecaster,
)
from errors import ConfigError, DataError, ForecastToolError, NumericalError, StageError
from evaluation import component_measures, run_benchmark
from synthetic import generate_synthetic
from timeseries import (
    DayType,
    Direction,
    TimeSeries,
    aggregate_events,
    descriptive_stats,
    read_events_csv,
    read_series_csv,
    split_calendar,
    split_train_test,
    write_frame_csv,
    write_series_csv,
)
from vmd import scan_mode_count, vmd_decompose

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageErrorParser(argparse.ArgumentParser):
    """argparse that raises ConfigError instead of exiting with status 2"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


class Run:
    """Resolved config, seed, output directory and provenance header for one invocation"""

    def __init__(self, args: argparse.Namespace, config: RunConfig):
        self.args = args
        self.config = config
        self.seed = args.seed if args.seed is not None else Config.DEFAULT_SEED
        self.out = Path(args.out or Config.DEFAULT_OUT)
        self.header = Config.header(config.digest(), self.seed)

    def output(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name


def _write_series(run: Run, series: TimeSeries, name: str) -> Path:
    path = write_series_csv(series, run.output(name), run.header)
    logger.info(f"Wrote {len(series)} points to {path}")
    return path


def cmd_ingest(run: Run) -> int:
    """Aggregate taps (or load a pre-aggregated series), split by day type and into train/test"""
    args, ingest = run.args, run.config.ingest
    if args.events:
        events = read_events_csv(args.events)
        station = args.station or ingest.station
        if not station:
            stations = sorted({e.station_id for e in events})
            if len(stations) != 1:
                raise ConfigError(f"--station is required: the events cover {len(stations)} stations")
            station = stations[0]
        direction = ingest.direction or None
        series = aggregate_events(
            events,
            station,
            ingest.interval_minutes,
            run.config.service_window(),
            Direction(direction) if direction else None,
        )
    elif args.series:
        series = read_series_csv(args.series)
    else:
        raise ConfigError("ingest needs --events or --series")

    _write_series(run, series, "series.csv")
    if series.day_type == DayType.MIXED and series.day_dates is not None:
        parts = dict(zip(("weekday", "weekend"), split_calendar(series)))
    else:
        parts = {series.day_type.value: series}
    for name, part in parts.items():
        if part is None:
            continue
        _write_series(run, part, f"{name}.csv")
        if part.full_days < 3:
            logger.warning(f"{name} series has {part.full_days} whole days; skipping the train/test split")
            continue
        train, test = split_train_test(part, ingest.train_fraction)
        _write_series(run, train, f"{name}_train.csv")
        _write_series(run, test, f"{name}_test.csv")
    return EXIT_OK


def cmd_decompose(run: Run) -> int:
    """Mode CSVs, residual, modes.meta and per-mode measures"""
    series = read_series_csv(run.args.input)
    config = run.config.vmd
    if run.args.scan_k:
        scans = scan_mode_count(series.values, [int(k) for k in run.args.scan_k.split(",")], config)
        for k, scan in scans.items():
            print(f"k={k} center_freqs={' '.join(f'{w:.6f}' for w in scan.center_freqs)} "
                  f"min_gap={scan.min_gap:.6f} converged={str(scan.converged).lower()}")
        return EXIT_OK

    modeset = vmd_decompose(series.values, config)
    logger.info(f"VMD: {modeset.iterations_used} iterations, converged={modeset.converged}")
    rows = []
    for j, mode in enumerate(modeset.modes):
        _write_series(run, series.with_values(mode), f"mode_{j}.csv")
        try:
            measures = component_measures(mode, series.values)
            rows.append({"component": f"mode_{j}", "center_freq": modeset.center_freqs[j],
                         "mean_period": measures.mean_period, "correlation": measures.correlation,
                         "variance_share": measures.variance_share})
        except DataError as e:
            logger.warning(f"mode_{j}: measures unavailable ({e})")
            rows.append({"component": f"mode_{j}", "center_freq": modeset.center_freqs[j],
                         "mean_period": np.nan, "correlation": np.nan, "variance_share": np.nan})
    _write_series(run, series.with_values(modeset.residual), "residual.csv")
    write_frame_csv(pd.DataFrame(rows), run.output("measures.csv"), run.header)

    with open(run.output("modes.meta"), "w") as f:
        f.write(f"# {run.header}\n")
        f.write(f"k {modeset.k}\n")
        f.write("center_freqs " + " ".join(format(float(w), ".17g") for w in modeset.center_freqs) + "\n")
        f.write(f"iterations {modeset.iterations_used}\n")
        f.write(f"converged {str(modeset.converged).lower()}\n")
    return EXIT_OK


def _training_series(run: Run):
    """Training part and the full series (context for full_series decomposition)"""
    series = read_series_csv(run.args.input)
    if run.args.split:
        train, _ = split_train_test(series, run.config.ingest.train_fraction)
        return train, series
    return series, series


def cmd_fit(run: Run) -> int:
    train, full = _training_series(run)
    config = run.config.ensemble_config(run.seed)
    forecaster = fit_forecaster(run.args.model_kind, train, config, context=full)
    directory = Path(run.args.model) if run.args.model else run.output(run.args.model_kind)
    save_forecaster(forecaster, directory, run.header)
    logger.info(f"Saved {run.args.model_kind} model to {directory}")
    return EXIT_OK


def cmd_forecast(run: Run) -> int:
    args = run.args
    forecaster = load_forecaster(args.model)
    if args.input:
        values = read_series_csv(args.input).values
        forecasts = forecaster.forecast_origins(values, [len(values)], args.horizon)[0]
    elif isinstance(forecaster, AdaEnsembleForecaster):
        forecasts = forecast_adaensemble(forecaster.model, args.horizon)
    else:
        raise ConfigError(f"forecasting a {forecaster.kind} model needs --input with the history")
    frame = pd.DataFrame({"step": np.arange(1, args.horizon + 1), "value": forecasts})
    write_frame_csv(frame, run.output("forecast.csv"), run.header)
    logger.info(f"Wrote {args.horizon}-step forecast to {run.out / 'forecast.csv'}")
    return EXIT_OK


def cmd_benchmark(run: Run) -> int:
    bench = run.config.benchmark
    if run.args.input:
        series = read_series_csv(run.args.input)
        dataset = Path(run.args.input).stem
    else:
        series = generate_synthetic(run.config.synthetic_config(run.seed)).series
        dataset = bench.dataset_id
    train, test = split_train_test(series, run.config.ingest.train_fraction)
    report = run_benchmark(
        train,
        test,
        model_kinds=bench.models,
        horizons=range(1, bench.max_horizon + 1),
        config=run.config.ensemble_config(run.seed),
        origin_stride=bench.origin_stride,
        compare_scopes=bench.compare_scopes,
        metadata={"dataset": dataset, "config_digest": run.config.digest()},
    )
    for path in report.write(run.output("benchmark"), run.header):
        logger.info(f"Wrote {path}")
    return EXIT_OK


def cmd_synth(run: Run) -> int:
    synthetic = generate_synthetic(run.config.synthetic_config(run.seed))
    _write_series(run, synthetic.series, "synthetic.csv")
    write_frame_csv(synthetic.to_frame(), run.output("components.csv"), run.header)
    return EXIT_OK


def cmd_stats(run: Run) -> int:
    """Descriptive statistics for the whole series and each day type"""
    series = read_series_csv(run.args.input)
    parts = {"all": series}
    if series.day_type == DayType.MIXED and series.day_dates is not None:
        weekday, weekend = split_calendar(series)
        parts.update({"weekday": weekday, "weekend": weekend})
    rows = []
    for name, part in parts.items():
        if part is None:
            continue
        s = descriptive_stats(part)
        rows.append({"series": name, "points": len(part), "mean": s.mean, "std": s.std,
                     "skewness": s.skewness, "kurtosis": s.kurtosis})
    write_frame_csv(pd.DataFrame(rows), run.output("stats.csv"), run.header)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "decompose": cmd_decompose,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "benchmark": cmd_benchmark,
    "synth": cmd_synth,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    common = UsageErrorParser(add_help=False)
    common.add_argument("--config", help="INI file with [vmd] [sarima] [mlp] [lstm] [ensemble] [benchmark] [ingest] [synth]")
    common.add_argument("--seed", type=int, help="master seed (default ADAENSEMBLE_SEED or 7)")
    common.add_argument("--out", help="output directory (default ADAENSEMBLE_OUT or ./out)")
    common.add_argument("--quiet", action="store_true", help="log warnings and errors only")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")

    parser = UsageErrorParser(prog="adaensemble", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=UsageErrorParser)
    sub.required = True

    p = sub.add_parser("ingest", parents=[common], help="aggregate taps and split the series")
    p.add_argument("--events", help="CSV with timestamp,station_id,direction")
    p.add_argument("--series", help="pre-aggregated CSV with timestamp,count")
    p.add_argument("--station")
    p.add_argument("--interval", type=int, dest="interval_minutes")
    p.add_argument("--direction", choices=[d.value for d in Direction])
    p.add_argument("--train-fraction", type=float)

    p = sub.add_parser("decompose", parents=[common], help="variational mode decomposition")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--scan-k", help="comma-separated mode counts to compare (diagnostic printout)")

    p = sub.add_parser("fit", parents=[common], help="fit and save a model")
    p.add_argument("--input", required=True)
    p.add_argument("--model-kind", default="adaensemble",
                   choices=MODEL_KINDS)
    p.add_argument("--model", help="model directory to write (default OUT/<kind>)")
    p.add_argument("--scope", choices=["train_only", "full_series"])
    p.add_argument("--split", action="store_true", help="fit on the training part of a whole-day split")

    p = sub.add_parser("forecast", parents=[common], help="forecast from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--input", help="history to forecast from (required except for adaensemble)")

    p = sub.add_parser("benchmark", parents=[common], help="six-model multi-horizon benchmark")
    p.add_argument("--input", help="series CSV (default: synthetic fixture from [synth])")
    p.add_argument("--models", help="comma-separated model kinds")
    p.add_argument("--max-horizon", type=int)
    p.add_argument("--origin-stride", type=int)

    sub.add_parser("synth", parents=[common], help="write the synthetic dataset and its components")

    p = sub.add_parser("stats", parents=[common], help="descriptive statistics by day type")
    p.add_argument("--input", required=True)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    """Command-line flags as section.key overrides"""
    flags = {
        "ingest.station": getattr(args, "station", None),
        "ingest.interval_minutes": getattr(args, "interval_minutes", None),
        "ingest.direction": getattr(args, "direction", None),
        "ingest.train_fraction": getattr(args, "train_fraction", None),
        "vmd.k": getattr(args, "k", None),
        "vmd.alpha": getattr(args, "alpha", None),
        "ensemble.decomposition_scope": getattr(args, "scope", None),
        "benchmark.models": getattr(args, "models", None),
        "benchmark.max_horizon": getattr(args, "max_horizon", None),
        "benchmark.origin_stride": getattr(args, "origin_stride", None),
    }
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        flags[key.strip()] = value
    return flags


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, StageError):
        error = error.root
    if isinstance(error, ConfigError):
        return EXIT_USAGE
    if isinstance(error, (DataError, FileNotFoundError)):
        return EXIT_DATA
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_DATA


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and map failures to exit codes"""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        logger.error(str(e))
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.WARNING if args.quiet else getattr(logging, Config.LOG_LEVEL, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    try:
        config = load_run_config(args.config).with_overrides(_overrides(args))
        run = Run(args, config)
        logger.info(f"{args.command}: config {config.digest()}, seed {run.seed}")
        return COMMANDS[args.command](run)
    except (ForecastToolError, FileNotFoundError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return exit_code_for(e)
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
