import configparser
import hashlib
import os
import typing
from dataclasses import dataclass, field, fields, replace
from datetime import date, time
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from dotenv import load_dotenv

from ensemble import MODEL_KINDS, EnsembleConfig
from errors import ConfigError
from lstm import HIDDEN_GRID, LstmConfig
from mlp import MlpConfig
from sarima import SarimaConfig
from synthetic import SyntheticConfig
from training import TrainConfig
from vmd import VmdConfig

# Load environment variables from backend/.env
load_dotenv(Path(__file__).parent / '.env')


class Config:
    """Runtime settings from the environment"""

    TOOL_NAME = 'adaensemble'
    TOOL_VERSION = '0.1.0'

    LOG_LEVEL = os.getenv('ADAENSEMBLE_LOG_LEVEL', 'INFO').upper()
    DEFAULT_SEED = int(os.getenv('ADAENSEMBLE_SEED', 7))
    DEFAULT_OUT = os.getenv('ADAENSEMBLE_OUT', 'out')

    @classmethod
    def header(cls, digest: str, seed: int) -> str:
        """Provenance line written at the top of every output file"""
        return f"{cls.TOOL_NAME} {cls.TOOL_VERSION} config={digest} seed={seed}"


@dataclass(frozen=True)
class MlpSection:
    hidden_min: int = 4
    hidden_max: int = 15
    max_lag: int = 24
    n_lags: Optional[int] = None
    lag_method: str = 'acf'
    learning_rate: float = 0.05
    epochs: int = 500
    batch_size: int = 32
    momentum: float = 0.0
    clip_norm: Optional[float] = None
    validation_fraction: float = 0.2
    tie_tolerance: float = 1e-3
    n_jobs: int = 1
    patience: int = 0


@dataclass(frozen=True)
class LstmSection:
    hidden_sizes: Tuple[int, ...] = HIDDEN_GRID
    lag_window: int = 24
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 32
    momentum: float = 0.0
    clip_norm: Optional[float] = 5.0
    validation_fraction: float = 0.2
    tie_tolerance: float = 1e-3
    n_jobs: int = 1
    patience: int = 5


@dataclass(frozen=True)
class EnsembleSection:
    decomposition_scope: str = 'train_only'
    recombiner_hidden_min: int = 2
    recombiner_hidden_max: int = 8
    recombiner_learning_rate: float = 0.05
    recombiner_epochs: int = 500
    recombiner_batch_size: int = 32
    n_jobs: int = 1


@dataclass(frozen=True)
class BenchmarkSection:
    models: Tuple[str, ...] = MODEL_KINDS
    max_horizon: int = 10
    origin_stride: int = 1
    compare_scopes: bool = False
    dataset_id: str = 'synthetic'


@dataclass(frozen=True)
class IngestSection:
    station: str = ''
    direction: str = ''
    interval_minutes: int = 15
    service_start: str = '06:30'
    service_end: str = '24:00'
    train_fraction: float = 2.0 / 3.0


@dataclass(frozen=True)
class SynthSection:
    days: int = 20
    points_per_day: int = 71
    harmonics: str = '120:-1.2,30:0.4'
    ar_coeffs: Tuple[float, ...] = (0.6, -0.2)
    ar_noise_std: float = 15.0
    noise_std: float = 8.0
    weekend_scale: float = 1.0
    level: float = 400.0
    start: str = '2013-10-14'
    service_start: str = '06:30'
    interval_minutes: int = 15


SECTIONS = ('vmd', 'sarima', 'mlp', 'lstm', 'ensemble', 'benchmark', 'ingest', 'synth')


def _parse_clock(text: str) -> time:
    """HH:MM, with 24:00 read as midnight at the end of the day"""
    try:
        hour, minute = (int(part) for part in text.strip().split(':'))
    except ValueError:
        raise ConfigError(f"clock time must look like HH:MM, got {text!r}")
    if hour == 24 and minute == 0:
        return time(0, 0)
    try:
        return time(hour, minute)
    except ValueError as e:
        raise ConfigError(f"invalid clock time {text!r}: {e}")


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the toolkit, one dataclass per INI section"""
    vmd: VmdConfig = field(default_factory=VmdConfig)
    sarima: SarimaConfig = field(default_factory=SarimaConfig)
    mlp: MlpSection = field(default_factory=MlpSection)
    lstm: LstmSection = field(default_factory=LstmSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    benchmark: BenchmarkSection = field(default_factory=BenchmarkSection)
    ingest: IngestSection = field(default_factory=IngestSection)
    synth: SynthSection = field(default_factory=SynthSection)

    def to_ini(self) -> str:
        """Canonical rendering: every section, every key, declaration order"""
        lines = []
        for name in SECTIONS:
            section = getattr(self, name)
            lines.append(f"[{name}]")
            for f in fields(section):
                lines.append(f"{f.name} = {_render(getattr(section, f.name))}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode('utf-8')).hexdigest()[:16]

    def with_overrides(self, overrides: Mapping[str, Any]) -> 'RunConfig':
        """
        Apply ``section.key`` overrides; string values are parsed like file values

        Raises:
            ConfigError: on an unknown section or key, or an invalid value
        """
        config = self
        for dotted, value in overrides.items():
            if value is None:
                continue
            name, _, key = dotted.partition('.')
            if name not in SECTIONS:
                raise ConfigError(f"unknown config section [{name}]")
            section = getattr(config, name)
            kinds = {f.name: f.type for f in fields(section)}
            if key not in kinds:
                raise ConfigError(f"unknown key {key!r} in section [{name}]")
            if isinstance(value, str):
                value = _parse(value, kinds[key], f"{name}.{key}")
            config = replace(config, **{name: _rebuild(section, {key: value}, name)})
        return config

    def ensemble_config(self, seed: int) -> EnsembleConfig:
        m, l, e = self.mlp, self.lstm, self.ensemble
        return EnsembleConfig(
            vmd=self.vmd,
            sarima=self.sarima,
            mlp=MlpConfig(
                hidden_sizes=tuple(range(m.hidden_min, m.hidden_max + 1)),
                max_lag=m.max_lag,
                n_lags=m.n_lags,
                lag_method=m.lag_method,
                train=TrainConfig(m.learning_rate, m.epochs, m.batch_size, m.momentum, m.clip_norm,
                                  m.validation_fraction, m.tie_tolerance, m.n_jobs, m.patience),
            ),
            lstm=LstmConfig(
                hidden_sizes=l.hidden_sizes,
                lag_window=l.lag_window,
                train=TrainConfig(l.learning_rate, l.epochs, l.batch_size, l.momentum, l.clip_norm,
                                  l.validation_fraction, l.tie_tolerance, l.n_jobs, l.patience),
            ),
            recombiner_hidden_sizes=tuple(range(e.recombiner_hidden_min, e.recombiner_hidden_max + 1)),
            recombiner_train=TrainConfig(
                learning_rate=e.recombiner_learning_rate,
                epochs=e.recombiner_epochs,
                batch_size=e.recombiner_batch_size,
            ),
            decomposition_scope=e.decomposition_scope,
            seed=seed,
            n_jobs=e.n_jobs,
        )

    def synthetic_config(self, seed: int) -> SyntheticConfig:
        s = self.synth
        try:
            harmonics = tuple(
                tuple(float(v) for v in pair.split(':'))
                for pair in s.harmonics.split(',') if pair.strip()
            )
            start = date.fromisoformat(s.start)
        except ValueError as e:
            raise ConfigError(f"invalid [synth] value: {e}")
        if any(len(pair) != 2 for pair in harmonics):
            raise ConfigError(f"harmonics must be amplitude:phase pairs, got {s.harmonics!r}")
        return SyntheticConfig(
            days=s.days,
            points_per_day=s.points_per_day,
            harmonics=harmonics,
            ar_coeffs=s.ar_coeffs,
            ar_noise_std=s.ar_noise_std,
            noise_std=s.noise_std,
            weekend_scale=s.weekend_scale,
            level=s.level,
            seed=seed,
            start=start,
            service_start=_parse_clock(s.service_start),
            interval_minutes=s.interval_minutes,
        )

    def service_window(self) -> Tuple[time, time]:
        return _parse_clock(self.ingest.service_start), _parse_clock(self.ingest.service_end)


def _render(value) -> str:
    if value is None:
        return 'none'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, tuple):
        return ','.join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, kind, where: str):
    text = text.strip()
    origin = typing.get_origin(kind)
    try:
        if origin is Union:
            inner = [a for a in typing.get_args(kind) if a is not type(None)][0]
            return None if text.lower() in ('none', '') else _parse(text, inner, where)
        if origin is tuple:
            inner = typing.get_args(kind)[0]
            return tuple(_parse(part, inner, where) for part in text.split(',') if part.strip())
        if kind is bool:
            lowered = text.lower()
            if lowered in ('true', 'yes', 'on', '1'):
                return True
            if lowered in ('false', 'no', 'off', '0'):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError as e:
        raise ConfigError(f"invalid value for {where}: {e}")


def _rebuild(section, values: Dict[str, Any], name: str):
    try:
        return replace(section, **values)
    except ConfigError as e:
        raise ConfigError(f"invalid [{name}] settings: {e}")
    except TypeError as e:
        raise ConfigError(f"invalid [{name}] settings: {e}")


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Read an INI file into a RunConfig; None gives the defaults

    Raises:
        FileNotFoundError: if the file does not exist
        ConfigError: on unknown sections or keys, or invalid values
    """
    config = RunConfig()
    if path is None:
        return config
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"malformed config file {path}: {e}")

    overrides = {}
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown config section [{name}] in {path}")
        for key, value in parser.items(name):
            overrides[f"{name}.{key}"] = value
    return config.with_overrides(overrides)
