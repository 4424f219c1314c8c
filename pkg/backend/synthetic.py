#!/usr/bin/env python3
"""
Synthetic ridership generator
Used for tests and desk-scale benchmarks where smart-card data is not available

Each series is a periodic trend (level plus daily harmonics), a deterministic
autoregressive part and white-noise volatility, with the ground-truth parts
returned alongside the sum.
"""

import logging
from dataclasses import dataclass, field
from datetime import date, datetime, time
from typing import Tuple

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from errors import ConfigError, NumericalError
from timeseries import DayType, TimeSeries

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticConfig:
    """
    Generator settings; the defaults are the shipped benchmark fixture

    ``harmonics`` holds (amplitude, phase) pairs; pair i is a sinusoid with
    i + 1 cycles per day.
    """
    days: int = 20
    points_per_day: int = 71
    harmonics: Tuple[Tuple[float, float], ...] = ((120.0, -1.2), (30.0, 0.4))
    ar_coeffs: Tuple[float, ...] = (0.6, -0.2)
    ar_noise_std: float = 15.0
    noise_std: float = 8.0
    weekend_scale: float = 1.0
    level: float = 400.0
    seed: int = 7
    start: date = field(default=date(2013, 10, 14))
    service_start: time = field(default=time(6, 30))
    interval_minutes: int = 15

    def __post_init__(self):
        if self.days <= 0 or self.points_per_day <= 0:
            raise ConfigError("days and points_per_day must be positive")
        if self.noise_std < 0 or self.ar_noise_std < 0:
            raise ConfigError("noise standard deviations must be nonnegative")
        if self.weekend_scale <= 0:
            raise ConfigError(f"weekend_scale must be positive, got {self.weekend_scale}")


@dataclass(frozen=True)
class SyntheticSeries:
    series: TimeSeries
    periodic: np.ndarray
    deterministic: np.ndarray
    volatility: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "timestamp": self.series.timestamps().strftime("%Y-%m-%dT%H:%M:%S"),
            "value": self.series.values,
            "periodic": self.periodic,
            "deterministic": self.deterministic,
            "volatility": self.volatility,
        })


def ar_spectral_radius(coeffs) -> float:
    """Largest modulus of the AR companion-matrix eigenvalues"""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size == 0:
        return 0.0
    companion = np.zeros((coeffs.size, coeffs.size))
    companion[0, :] = coeffs
    companion[1:, :-1] = np.eye(coeffs.size - 1)
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def generate_synthetic(config: SyntheticConfig) -> SyntheticSeries:
    """
    Draw one synthetic series; identical config and seed give identical output

    Raises:
        NumericalError: if the AR coefficients are not stationary
    """
    radius = ar_spectral_radius(config.ar_coeffs)
    if radius >= 1.0:
        raise NumericalError(f"AR coefficients {config.ar_coeffs} are not stationary (spectral radius {radius:.4f})")

    rng = np.random.default_rng(config.seed)
    ppd = config.points_per_day
    n = config.days * ppd
    # phase within the day keeps the trend exactly day-periodic
    t = np.arange(n) % ppd

    periodic = np.full(n, float(config.level))
    for i, (amplitude, phase) in enumerate(config.harmonics):
        periodic += amplitude * np.sin(2.0 * np.pi * (i + 1) * t / ppd + phase)

    ar = np.asarray(config.ar_coeffs, dtype=float)
    if ar.size and np.any(ar != 0.0):
        burn_in = 10 * ppd
        shocks = rng.normal(0.0, config.ar_noise_std, n + burn_in)
        deterministic = lfilter([1.0], np.r_[1.0, -ar], shocks)[burn_in:]
    else:
        deterministic = np.zeros(n)

    if config.noise_std > 0:
        volatility = rng.normal(0.0, config.noise_std, n)
    else:
        volatility = np.zeros(n)

    day_dates = tuple((pd.Timestamp(config.start) + pd.Timedelta(days=i)).date() for i in range(config.days))
    scale = np.repeat([config.weekend_scale if d.weekday() >= 5 else 1.0 for d in day_dates], ppd)
    periodic, deterministic, volatility = periodic * scale, deterministic * scale, volatility * scale

    series = TimeSeries(
        start_timestamp=datetime.combine(config.start, config.service_start),
        values=periodic + deterministic + volatility,
        interval_minutes=config.interval_minutes,
        day_type=DayType.MIXED,
        points_per_day=ppd,
        day_dates=day_dates,
    )
    logger.info(f"Generated synthetic series: {config.days} days x {ppd} points, seed {config.seed}")
    return SyntheticSeries(series=series, periodic=periodic, deterministic=deterministic, volatility=volatility)
