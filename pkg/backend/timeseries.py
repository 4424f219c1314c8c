"""
Time-series data model for station ridership

Holds the uniformly sampled series type used by every model, plus smart-card
ingestion, weekday/weekend splitting, whole-day train/test splitting,
min-max scaling, descriptive statistics and CSV input/output.
"""

import logging
import math
from dataclasses import dataclass, replace
from datetime import date, datetime, time, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.preprocessing import MinMaxScaler as _RangeFitter

from errors import ConfigError, DataError

logger = logging.getLogger(__name__)

# 24:00 is written as time(0, 0) in the end slot
DEFAULT_SERVICE_WINDOW = (time(6, 30), time(0, 0))
DEFAULT_INTERVAL_MINUTES = 15
DEFAULT_TARGET_RANGE = (0.1, 0.9)

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


class DayType(str, Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"
    MIXED = "mixed"


class Direction(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"


@dataclass(frozen=True)
class TapEvent:
    """One smart-card tap at a station gate"""
    timestamp: datetime
    station_id: str
    direction: Direction = Direction.ENTRY


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    Uniformly sampled real-valued series with calendar metadata

    ``day_dates`` holds the calendar date of each block of ``points_per_day``
    values. After a weekday/weekend split the blocks are no longer
    consecutive dates, which is why the dates are stored rather than derived.
    """
    start_timestamp: datetime
    values: np.ndarray
    interval_minutes: int = DEFAULT_INTERVAL_MINUTES
    day_type: DayType = DayType.MIXED
    points_per_day: int = 70
    day_dates: Optional[Tuple[date, ...]] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise DataError("TimeSeries values must be one-dimensional")
        if values.size == 0:
            raise DataError("TimeSeries must hold at least one value")
        if not np.all(np.isfinite(values)):
            raise DataError("TimeSeries values contain NaN or infinite entries")
        if self.interval_minutes <= 0:
            raise DataError(f"interval_minutes must be positive, got {self.interval_minutes}")
        if self.points_per_day <= 0:
            raise DataError(f"points_per_day must be positive, got {self.points_per_day}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "day_type", DayType(self.day_type))
        if self.day_dates is not None:
            dates = tuple(self.day_dates)
            if len(dates) != self.n_days:
                raise DataError(
                    f"day_dates has {len(dates)} entries but the values span {self.n_days} days"
                )
            object.__setattr__(self, "day_dates", dates)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def n_days(self) -> int:
        """Number of day blocks, counting a trailing partial day"""
        return math.ceil(len(self) / self.points_per_day)

    @property
    def full_days(self) -> int:
        return len(self) // self.points_per_day

    def with_values(self, values: Sequence[float]) -> "TimeSeries":
        """Same metadata, new values of the same length"""
        values = np.asarray(values, dtype=float)
        if values.size != len(self):
            raise DataError(f"expected {len(self)} values, got {values.size}")
        return replace(self, values=values)

    def slice_days(self, first: int, last: Optional[int] = None) -> "TimeSeries":
        """Day blocks ``first`` (inclusive) to ``last`` (exclusive)"""
        last = self.n_days if last is None else last
        ppd = self.points_per_day
        values = self.values[first * ppd:last * ppd]
        if self.day_dates is not None:
            dates = self.day_dates[first:last]
            start = datetime.combine(dates[0], self.start_timestamp.time())
        else:
            dates = None
            start = self.start_timestamp + timedelta(minutes=first * ppd * self.interval_minutes)
        return replace(self, values=values, start_timestamp=start, day_dates=dates)

    def timestamps(self) -> pd.DatetimeIndex:
        """Timestamp of every point on the service grid"""
        step = pd.Timedelta(minutes=self.interval_minutes)
        if self.day_dates is None:
            return pd.date_range(self.start_timestamp, periods=len(self), freq=step)
        clock = self.start_timestamp.time()
        offsets = np.arange(len(self)) % self.points_per_day
        days = np.repeat(np.arange(self.n_days), self.points_per_day)[:len(self)]
        day_starts = pd.DatetimeIndex([datetime.combine(d, clock) for d in self.day_dates])
        return day_starts[days] + pd.to_timedelta(offsets * self.interval_minutes, unit="min")


@dataclass(frozen=True)
class MinMaxScaler:
    """Affine map of [low, high] onto [target_lo, target_hi], no clipping"""
    low: float
    high: float
    target_lo: float = DEFAULT_TARGET_RANGE[0]
    target_hi: float = DEFAULT_TARGET_RANGE[1]

    def __post_init__(self):
        if not self.high > self.low:
            raise DataError(f"degenerate range: high={self.high} low={self.low}")
        if not self.target_hi > self.target_lo:
            raise ConfigError(f"target range must increase, got [{self.target_lo}, {self.target_hi}]")

    def apply(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return self.target_lo + (values - self.low) * (self.target_hi - self.target_lo) / (self.high - self.low)

    def invert(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return self.low + (values - self.target_lo) * (self.high - self.low) / (self.target_hi - self.target_lo)


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    std: float
    skewness: float
    kurtosis: float


SeriesLike = Union[TimeSeries, Sequence[float], np.ndarray]


def as_array(series: SeriesLike) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=float)


def _clock_minutes(clock: time, is_end: bool = False) -> int:
    minutes = clock.hour * 60 + clock.minute
    if is_end and minutes == 0:
        return 24 * 60
    return minutes


def aggregate_events(
    events: Iterable[TapEvent],
    station: str,
    interval_minutes: int = DEFAULT_INTERVAL_MINUTES,
    service_window: Tuple[time, time] = DEFAULT_SERVICE_WINDOW,
    direction: Optional[Direction] = None,
) -> TimeSeries:
    """
    Count a station's taps per service-window bin, one block per calendar day

    Days run from the earliest to the latest event date in the whole event
    set, so a day without taps at this station contributes zero bins. Taps
    outside the service window are dropped; a last bin shorter than the
    interval is kept.

    Raises:
        DataError: on an empty event set or an unknown station
    """
    events = list(events)
    if not events:
        raise DataError("no events")
    if interval_minutes <= 0:
        raise ConfigError(f"interval_minutes must be positive, got {interval_minutes}")

    frame = pd.DataFrame({
        "timestamp": pd.to_datetime([e.timestamp for e in events]),
        "station_id": [str(e.station_id) for e in events],
        "direction": [Direction(e.direction).value for e in events],
    })
    if str(station) not in set(frame["station_id"]):
        raise DataError(f"unknown station {station!r}")

    start_min = _clock_minutes(service_window[0])
    end_min = _clock_minutes(service_window[1], is_end=True)
    if end_min <= start_min:
        raise ConfigError(f"service window must end after it starts: {service_window}")
    n_bins = math.ceil((end_min - start_min) / interval_minutes)

    all_days = frame["timestamp"].dt.normalize()
    first_day = all_days.min()
    n_days = int((all_days.max() - first_day).days) + 1

    mask = frame["station_id"] == str(station)
    if direction is not None:
        mask &= frame["direction"] == Direction(direction).value
    taps = frame.loc[mask, "timestamp"]

    minutes = (taps.dt.hour * 60 + taps.dt.minute + taps.dt.second / 60.0).to_numpy()
    in_window = (minutes >= start_min) & (minutes < end_min)
    bins = ((minutes[in_window] - start_min) // interval_minutes).astype(int)
    days = (taps.dt.normalize()[in_window] - first_day).dt.days.to_numpy()

    counts = np.zeros((n_days, n_bins))
    np.add.at(counts, (days, bins), 1.0)
    logger.info(
        f"Aggregated {int(counts.sum())} of {int(mask.sum())} taps at station {station} "
        f"into {n_days} days x {n_bins} bins"
    )

    day_dates = tuple((first_day + pd.Timedelta(days=i)).date() for i in range(n_days))
    return TimeSeries(
        start_timestamp=datetime.combine(day_dates[0], service_window[0]),
        values=counts.ravel(),
        interval_minutes=interval_minutes,
        day_type=DayType.MIXED,
        points_per_day=n_bins,
        day_dates=day_dates,
    )


def _take_days(series: TimeSeries, keep: List[int], day_type: DayType) -> Optional[TimeSeries]:
    if not keep:
        return None
    ppd = series.points_per_day
    values = np.concatenate([series.values[i * ppd:(i + 1) * ppd] for i in keep])
    dates = tuple(series.day_dates[i] for i in keep)
    return replace(
        series,
        values=values,
        day_type=day_type,
        day_dates=dates,
        start_timestamp=datetime.combine(dates[0], series.start_timestamp.time()),
    )


def split_calendar(series: TimeSeries) -> Tuple[Optional[TimeSeries], Optional[TimeSeries]]:
    """
    Split a mixed series into contiguous weekday and weekend series

    Excluded days are deleted, so each result runs day block after day block
    with no gap. An empty partition comes back as ``None``.

    Raises:
        DataError: if the series has no calendar metadata or is not mixed
    """
    if series.day_dates is None:
        raise DataError("series has no calendar metadata; cannot split weekdays from weekends")
    if series.day_type != DayType.MIXED:
        raise DataError(f"split_calendar expects a mixed series, got {series.day_type.value}")

    weekday_idx = [i for i, d in enumerate(series.day_dates) if d.weekday() < 5]
    weekend_idx = [i for i, d in enumerate(series.day_dates) if d.weekday() >= 5]
    weekday = _take_days(series, weekday_idx, DayType.WEEKDAY)
    weekend = _take_days(series, weekend_idx, DayType.WEEKEND)
    if weekday is None:
        logger.warning("No weekday data in series; weekday partition is empty")
    if weekend is None:
        logger.warning("No weekend data in series; weekend partition is empty")
    return weekday, weekend


def split_train_test(series: TimeSeries, train_fraction: float = 2.0 / 3.0) -> Tuple[TimeSeries, TimeSeries]:
    """
    Chronological split on a whole-day boundary

    Train keeps the first floor(train_fraction * days) days; everything after
    (including a trailing partial day) is test.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    days = series.full_days
    if days < 3:
        raise DataError(f"insufficient data: {days} whole days, need at least 3")
    # 1e-9 keeps 2/3 * 30 from flooring to 19
    train_days = math.floor(train_fraction * days + 1e-9)
    train_days = min(max(train_days, 1), days - 1)
    return series.slice_days(0, train_days), series.slice_days(train_days)


def scale_fit(series: SeriesLike, target_range: Tuple[float, float] = DEFAULT_TARGET_RANGE) -> MinMaxScaler:
    """Fit a min-max scaler on (training) data only"""
    values = as_array(series)
    if values.size == 0 or np.ptp(values) == 0.0:
        raise DataError("degenerate range: cannot scale a constant series")
    fitter = _RangeFitter(feature_range=target_range).fit(values.reshape(-1, 1))
    return MinMaxScaler(
        low=float(fitter.data_min_[0]),
        high=float(fitter.data_max_[0]),
        target_lo=float(target_range[0]),
        target_hi=float(target_range[1]),
    )


def scale_apply(scaler: MinMaxScaler, series: SeriesLike):
    if isinstance(series, TimeSeries):
        return series.with_values(scaler.apply(series.values))
    return scaler.apply(series)


def scale_invert(scaler: MinMaxScaler, series: SeriesLike):
    if isinstance(series, TimeSeries):
        return series.with_values(scaler.invert(series.values))
    return scaler.invert(series)


def descriptive_stats(series: SeriesLike) -> DescriptiveStats:
    """Population mean/std and non-excess standardized moments"""
    values = as_array(series)
    if values.size < 2:
        raise DataError("descriptive statistics need at least two values")
    if np.ptp(values) == 0.0:
        raise DataError("constant series: skewness is undefined")
    return DescriptiveStats(
        mean=float(np.mean(values)),
        std=float(np.std(values)),
        skewness=float(stats.skew(values, bias=True)),
        kurtosis=float(stats.kurtosis(values, fisher=False, bias=True)),
    )


def autocorrelation(series: SeriesLike, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag (biased estimator)"""
    values = as_array(series)
    centered = values - values.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        raise DataError("autocorrelation of a constant series is undefined")
    max_lag = min(int(max_lag), values.size - 1)
    return np.array([float(centered[lag:] @ centered[:values.size - lag]) / denom for lag in range(max_lag + 1)])


def read_events_csv(path: Union[str, Path]) -> List[TapEvent]:
    """Load ``timestamp,station_id,direction`` tap records"""
    frame = _read_csv(path)
    missing = {"timestamp", "station_id", "direction"} - set(frame.columns)
    if missing:
        raise DataError(f"malformed CSV {path}: missing columns {sorted(missing)}")
    try:
        stamps = pd.to_datetime(frame["timestamp"])
        directions = [Direction(str(d).strip().lower()) for d in frame["direction"]]
    except (ValueError, TypeError) as e:
        raise DataError(f"malformed CSV {path}: {e}")
    return [
        TapEvent(timestamp=ts.to_pydatetime(), station_id=str(sid), direction=dr)
        for ts, sid, dr in zip(stamps, frame["station_id"], directions)
    ]


def read_series_csv(path: Union[str, Path]) -> TimeSeries:
    """
    Load a pre-aggregated ``timestamp,count`` (or ``timestamp,value``) file

    Interval, points per day, day dates and day type are recovered from the
    timestamps; every day must carry the same number of points.
    """
    frame = _read_csv(path)
    value_col = "count" if "count" in frame.columns else "value"
    if "timestamp" not in frame.columns or value_col not in frame.columns:
        raise DataError(f"malformed CSV {path}: expected columns timestamp,count or timestamp,value")
    try:
        stamps = pd.to_datetime(frame["timestamp"])
        values = frame[value_col].astype(float).to_numpy()
    except (ValueError, TypeError) as e:
        raise DataError(f"malformed CSV {path}: {e}")
    if len(values) == 0:
        raise DataError(f"no rows in {path}")
    if not stamps.is_monotonic_increasing:
        raise DataError(f"timestamps in {path} are not sorted")

    # service days run from the first clock time, so a 24:00 point stays on its day
    first = stamps.iloc[0]
    service_day = (stamps - (first - first.normalize())).dt.date
    per_day = stamps.groupby(service_day).size()
    ppd = int(per_day.max())
    if (per_day.iloc[:-1] != ppd).any():
        raise DataError(f"uneven day lengths in {path}: {sorted(set(per_day.tolist()))}")
    steps = stamps.diff().dropna()
    same_day = service_day.iloc[1:].to_numpy() == service_day.iloc[:-1].to_numpy()
    in_day_steps = steps[same_day]
    interval = int(in_day_steps.min().total_seconds() // 60) if len(in_day_steps) else DEFAULT_INTERVAL_MINUTES

    dates = tuple(per_day.index)
    weekend_flags = {d.weekday() >= 5 for d in dates}
    if weekend_flags == {False}:
        day_type = DayType.WEEKDAY
    elif weekend_flags == {True}:
        day_type = DayType.WEEKEND
    else:
        day_type = DayType.MIXED
    return TimeSeries(
        start_timestamp=stamps.iloc[0].to_pydatetime(),
        values=values,
        interval_minutes=max(interval, 1),
        day_type=day_type,
        points_per_day=ppd,
        day_dates=dates,
    )


def write_series_csv(series: TimeSeries, path: Union[str, Path], header: Optional[str] = None) -> Path:
    """Write ``timestamp,value`` rows, values with 6 decimals"""
    path = Path(path)
    frame = pd.DataFrame({
        "timestamp": series.timestamps().strftime(TIMESTAMP_FORMAT),
        "value": series.values,
    })
    write_frame_csv(frame, path, header)
    return path


def write_frame_csv(frame: pd.DataFrame, path: Union[str, Path], header: Optional[str] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        if header:
            f.write(f"# {header}\n")
        frame.to_csv(f, index=False, float_format="%.6f", lineterminator="\n")


def _read_csv(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    try:
        return pd.read_csv(path, comment="#", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"malformed CSV {path}: {e}")
