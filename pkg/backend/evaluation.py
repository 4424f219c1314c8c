"""
Forecast accuracy metrics, component measures and the multi-horizon benchmark
"""

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks
from sklearn.metrics import mean_absolute_percentage_error, mean_squared_error

from ensemble import MODEL_KINDS, EnsembleConfig, decomposer_for, fit_forecaster
from errors import ConfigError, DataError
from timeseries import SeriesLike, TimeSeries, as_array, write_frame_csv

logger = logging.getLogger(__name__)

SCOPE_COMPARISON_KIND = "adaensemble_full_series"


@dataclass(frozen=True)
class MetricPair:
    rmse: float
    mape: float

    def __post_init__(self):
        if self.rmse < 0 or self.mape < 0:
            raise DataError(f"metrics must be nonnegative, got rmse={self.rmse} mape={self.mape}")


@dataclass(frozen=True)
class ComponentMeasures:
    mean_period: float
    correlation: float
    variance_share: float


def _paired(actual: SeriesLike, predicted: SeriesLike) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(as_array(actual), dtype=float)
    p = np.asarray(as_array(predicted), dtype=float)
    if a.shape != p.shape:
        raise DataError(f"length mismatch: {a.size} actual values, {p.size} predictions")
    if a.size == 0:
        raise DataError("metrics need at least one value")
    return a, p


def mape(actual: SeriesLike, predicted: SeriesLike) -> float:
    """
    Mean absolute percentage error, in percent

    Raises:
        DataError: on a zero actual value or a length mismatch
    """
    a, p = _paired(actual, predicted)
    if np.any(a == 0):
        raise DataError(f"zero actual at position {int(np.flatnonzero(a == 0)[0])}; MAPE is undefined")
    return float(mean_absolute_percentage_error(a, p) * 100.0)


def rmse(actual: SeriesLike, predicted: SeriesLike) -> float:
    a, p = _paired(actual, predicted)
    return float(np.sqrt(mean_squared_error(a, p)))


def mean_period(component: SeriesLike) -> float:
    """
    Length divided by the number of strict local maxima

    A flat peak counts once. Endpoints never count.

    Raises:
        DataError: "aperiodic" when there is no interior peak
    """
    values = np.asarray(as_array(component), dtype=float)
    peaks, _ = find_peaks(values)
    if peaks.size == 0:
        raise DataError("aperiodic: component has no interior peak")
    return values.size / peaks.size


def _population_var(values: np.ndarray) -> float:
    return float(np.var(values))


def component_measures(component: SeriesLike, original: SeriesLike) -> ComponentMeasures:
    c, o = _paired(component, original)
    if np.ptp(c) == 0 or np.ptp(o) == 0:
        raise DataError("component measures need non-constant series")
    return ComponentMeasures(
        mean_period=mean_period(c),
        correlation=float(np.corrcoef(c, o)[0, 1]),
        variance_share=100.0 * _population_var(c) / _population_var(o),
    )


def covariance_share(a: SeriesLike, b: SeriesLike, original: SeriesLike) -> float:
    """100 * cov(a, b) / var(original), population moments"""
    x, y = _paired(a, b)
    _, o = _paired(a, original)
    return 100.0 * float(np.mean((x - x.mean()) * (y - y.mean()))) / _population_var(o)


@dataclass
class BenchmarkReport:
    """
    Metric grid over model kinds and horizons

    ``cells`` is keyed by (model kind, horizon) and must hold every
    combination.
    """
    model_kinds: Tuple[str, ...]
    horizons: Tuple[int, ...]
    cells: Dict[Tuple[str, int], MetricPair]
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        missing = [(k, h) for k in self.model_kinds for h in self.horizons if (k, h) not in self.cells]
        if missing:
            raise DataError(f"benchmark report is missing {len(missing)} cells, first {missing[0]}")

    def cell(self, kind: str, horizon: int) -> MetricPair:
        return self.cells[(kind, horizon)]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"model": k, "horizon": h, "rmse": self.cells[(k, h)].rmse, "mape": self.cells[(k, h)].mape}
            for k in self.model_kinds for h in self.horizons
        ]
        return pd.DataFrame(rows, columns=["model", "horizon", "rmse", "mape"])

    def to_text(self) -> str:
        """One block per metric: a row per model, a column per horizon"""
        width = max(len(k) for k in self.model_kinds) + 2
        lines = [f"{key}: {value}" for key, value in self.metadata.items()]
        for metric in ("rmse", "mape"):
            lines.append("")
            lines.append(f"{metric.upper()} (steps ahead)")
            lines.append("model".ljust(width) + "".join(f"{f'h={h}':>12}" for h in self.horizons))
            for kind in self.model_kinds:
                lines.append(kind.ljust(width) + "".join(
                    f"{getattr(self.cells[(kind, h)], metric):>12.4f}" for h in self.horizons))
        return "\n".join(lines) + "\n"

    def plot_frame(self, metric: str) -> pd.DataFrame:
        """Horizon column plus one column per model"""
        frame = pd.DataFrame({"horizon": list(self.horizons)})
        for kind in self.model_kinds:
            frame[kind] = [getattr(self.cells[(kind, h)], metric) for h in self.horizons]
        return frame

    def write(self, directory, header: Optional[str] = None) -> List[Path]:
        """report.csv, report.txt and plot_rmse.tsv / plot_mape.tsv"""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        csv_path = directory / "report.csv"
        write_frame_csv(self.to_frame(), csv_path, header)
        written.append(csv_path)

        text_path = directory / "report.txt"
        with open(text_path, "w") as f:
            if header:
                f.write(f"# {header}\n")
            f.write(self.to_text())
        written.append(text_path)

        for metric in ("rmse", "mape"):
            tsv_path = directory / f"plot_{metric}.tsv"
            with open(tsv_path, "w", newline="") as f:
                if header:
                    f.write(f"# {header}\n")
                self.plot_frame(metric).to_csv(f, sep="\t", index=False, float_format="%.6f", lineterminator="\n")
            written.append(tsv_path)
        return written


def rolling_origins(n_train: int, n_total: int, max_horizon: int, stride: int = 1) -> np.ndarray:
    """Origins t (forecasting values[t:t+h] from values[:t]) with room for the longest horizon"""
    if stride < 1:
        raise ConfigError(f"origin stride must be positive, got {stride}")
    return np.arange(n_train, n_total - max_horizon + 1, stride)


def _joined(train: TimeSeries, test: TimeSeries) -> TimeSeries:
    dates = None
    if train.day_dates is not None and test.day_dates is not None and len(train) % train.points_per_day == 0:
        dates = train.day_dates + test.day_dates
    return replace(train, values=np.concatenate([train.values, test.values]), day_dates=dates)


def run_benchmark(
    train: TimeSeries,
    test: TimeSeries,
    model_kinds: Iterable[str] = MODEL_KINDS,
    horizons: Sequence[int] = tuple(range(1, 11)),
    config: Optional[EnsembleConfig] = None,
    seed: Optional[int] = None,
    forecasters: Optional[Mapping[str, object]] = None,
    origin_stride: int = 1,
    compare_scopes: bool = False,
    metadata: Optional[Mapping[str, str]] = None,
) -> BenchmarkReport:
    """
    Rolling-origin evaluation of each model kind at each horizon

    Models are fit once on ``train``. At every origin in the test period
    each model forecasts the longest horizon from the data before the
    origin; the h-th step errors over all origins give the (kind, h) cell.
    ``forecasters`` supplies ready-made forecasters by kind name.

    Raises:
        DataError: if the test period is shorter than the longest horizon plus one
    """
    config = config or EnsembleConfig()
    if seed is not None:
        config = replace(config, seed=seed)
    horizons = tuple(sorted({int(h) for h in horizons}))
    if not horizons or horizons[0] < 1:
        raise ConfigError(f"horizons must be positive integers, got {horizons}")
    kinds = list(dict.fromkeys(model_kinds))
    forecasters = dict(forecasters or {})
    unknown = [k for k in kinds if k not in MODEL_KINDS and k not in forecasters]
    if unknown:
        raise ConfigError(f"unknown model kinds {unknown}; choose from {MODEL_KINDS}")
    if compare_scopes and SCOPE_COMPARISON_KIND not in kinds:
        kinds.append(SCOPE_COMPARISON_KIND)

    h_max = horizons[-1]
    if len(test) < h_max + 1:
        raise DataError(f"test period has {len(test)} points, need at least {h_max + 1} for horizon {h_max}")

    full = _joined(train, test)
    values = full.values
    origins = rolling_origins(len(train), len(values), h_max, origin_stride)
    logger.info(f"Benchmark: {len(kinds)} models, horizons {horizons[0]}..{h_max}, {origins.size} origins")

    decomposer = decomposer_for(config.vmd, config.decomposition_scope, len(train))
    cells: Dict[Tuple[str, int], MetricPair] = {}
    for kind in kinds:
        started = time.perf_counter()
        forecaster = forecasters.get(kind)
        if forecaster is None and kind == SCOPE_COMPARISON_KIND:
            other = replace(config, decomposition_scope="full_series")
            forecaster = fit_forecaster("adaensemble", train, other, context=full,
                                        decomposer=decomposer_for(other.vmd, "full_series", len(train)))
        elif forecaster is None:
            forecaster = fit_forecaster(kind, train, config, context=full, decomposer=decomposer)
        predictions = np.asarray(forecaster.forecast_origins(values, origins, h_max), dtype=float)
        if predictions.shape != (origins.size, h_max):
            raise DataError(f"{kind} returned forecasts of shape {predictions.shape}, expected {(origins.size, h_max)}")
        for h in horizons:
            actual = values[origins + h - 1]
            predicted = predictions[:, h - 1]
            cells[(kind, h)] = MetricPair(rmse=rmse(actual, predicted), mape=mape(actual, predicted))
        logger.info(
            f"{kind}: h=1 RMSE {cells[(kind, horizons[0])].rmse:.4f}, "
            f"h={h_max} RMSE {cells[(kind, h_max)].rmse:.4f} ({time.perf_counter() - started:.1f}s)"
        )

    meta = {
        "seed": str(config.seed),
        "decomposition_scope": config.decomposition_scope,
        "origins": str(origins.size),
        "origin_stride": str(origin_stride),
        "refit": "none, models fixed after training",
    }
    meta.update(metadata or {})
    return BenchmarkReport(model_kinds=tuple(kinds), horizons=horizons, cells=cells, metadata=meta)
