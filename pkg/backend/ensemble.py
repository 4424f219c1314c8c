"""
Decomposition-ensemble forecasting

VMD splits the series into three modes. The lowest-frequency mode is the
periodic component (SARIMA), the middle one the deterministic component
(LSTM) and the highest one, plus the VMD residual, the volatility component
(MLP). A second MLP recombines the three component forecasts.

Also holds the five benchmark forecasters and the rolling decomposition the
VMD-based forecasters share during evaluation. Every forecaster answers
``forecast_origins(values, origins, horizon)``: for each origin t, forecasts
of values[t], ..., values[t + horizon - 1] using values[:t] only.
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from errors import ConfigError, DataError, ForecastToolError, StageError
from lstm import LstmConfig, LstmModel, fit_lstm_forecaster, load_lstm, lstm_forecast_batch, save_lstm
from mlp import (
    MlpConfig,
    MlpModel,
    fit_mlp_forecaster,
    fit_recombiner,
    load_mlp,
    mlp_forecast_batch,
    mlp_predict,
    save_mlp,
)
from sarima import (
    SarimaConfig,
    SarimaModel,
    fit_auto_sarima,
    forecast_sarima,
    load_sarima,
    sarima_forecast_origins,
    save_sarima,
)
from timeseries import TimeSeries
from training import TrainConfig, derive_seed, format_float, read_weights, write_weights
from vmd import ModeSet, VmdConfig, vmd_decompose

logger = logging.getLogger(__name__)

ROLES = ("periodic", "deterministic", "volatility")
SINGLE_KINDS = ("sarima", "mlp", "lstm", "vmd_mlp", "vmd_lstm")
MODEL_KINDS = ("adaensemble",) + SINGLE_KINDS
SCOPES = ("train_only", "full_series")
RECOMBINATIONS = ("mlp", "additive")
RECOMBINER_SLACK = 1.05


@dataclass(frozen=True)
class EnsembleConfig:
    vmd: VmdConfig = field(default_factory=VmdConfig)
    sarima: SarimaConfig = field(default_factory=SarimaConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    lstm: LstmConfig = field(default_factory=LstmConfig)
    recombiner_hidden_sizes: Tuple[int, ...] = tuple(range(2, 9))
    recombiner_train: TrainConfig = field(default_factory=TrainConfig)
    decomposition_scope: str = "train_only"
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.decomposition_scope not in SCOPES:
            raise ConfigError(f"decomposition_scope must be one of {SCOPES}, got {self.decomposition_scope!r}")


@dataclass(frozen=True, eq=False)
class ComponentTriple:
    periodic: TimeSeries
    deterministic: TimeSeries
    volatility: TimeSeries

    def __post_init__(self):
        lengths = {len(self.periodic), len(self.deterministic), len(self.volatility)}
        if len(lengths) != 1:
            raise DataError(f"components must have equal lengths, got {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.periodic)

    def total(self) -> np.ndarray:
        return self.periodic.values + self.deterministic.values + self.volatility.values


@dataclass(frozen=True)
class ComponentAssignment:
    """Mode index and center frequency behind each role"""
    modes: Tuple[int, int, int]
    center_freqs: Tuple[float, float, float]

    def mode_for(self, role: str) -> int:
        return self.modes[ROLES.index(role)]


def component_assignment(modeset: ModeSet) -> ComponentAssignment:
    """
    Lowest center frequency to periodic, middle to deterministic, highest to volatility

    Raises:
        DataError: unless the decomposition has exactly three modes
    """
    if modeset.k != 3:
        raise DataError(f"component assignment needs exactly 3 modes, got {modeset.k}")
    order = np.argsort(np.asarray(modeset.center_freqs), kind="stable")
    return ComponentAssignment(
        modes=tuple(int(i) for i in order),
        center_freqs=tuple(float(modeset.center_freqs[i]) for i in order),
    )


def _component_arrays(modeset: ModeSet, assignment: ComponentAssignment) -> np.ndarray:
    periodic, deterministic, volatility = (modeset.modes[i] for i in assignment.modes)
    return np.vstack([periodic, deterministic, volatility + modeset.residual])


def assign_components(modeset: ModeSet, like: Optional[TimeSeries] = None) -> ComponentTriple:
    """
    Map three modes onto the periodic, deterministic and volatility roles

    The VMD residual goes into volatility so the components add back to the
    decomposed series. ``like`` supplies the calendar metadata.
    """
    arrays = _component_arrays(modeset, component_assignment(modeset))
    if like is None:
        like = TimeSeries(start_timestamp=datetime(1970, 1, 1), values=np.zeros(len(modeset)))
    elif len(like) != len(modeset):
        raise DataError(f"template series has {len(like)} points, decomposition has {len(modeset)}")
    return ComponentTriple(*(like.with_values(row) for row in arrays))


def _digest(values: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(values).tobytes()).hexdigest()


class RollingDecomposer:
    """
    Component histories at forecast origins

    ``train_only`` re-decomposes the trailing ``window`` points before each
    origin, so nothing after the origin is seen. ``full_series`` decomposes
    the whole series once and slices it. Results are cached so the VMD-based
    forecasters in one benchmark run share decompositions.
    """

    def __init__(self, config: VmdConfig, scope: str = "train_only", window: int = 0):
        if scope not in SCOPES:
            raise ConfigError(f"decomposition scope must be one of {SCOPES}, got {scope!r}")
        self.config = config
        self.scope = scope
        self.window = int(window)
        self._cache: Dict[str, ModeSet] = {}

    def _decompose(self, values: np.ndarray) -> ModeSet:
        key = _digest(values)
        if key not in self._cache:
            self._cache[key] = vmd_decompose(values, self.config)
        return self._cache[key]

    def modes_at(self, values: np.ndarray, origin: int) -> ModeSet:
        """Decomposition of the history before ``origin``"""
        if self.scope == "full_series":
            full = self._decompose(values)
            return ModeSet(
                modes=full.modes[:, :origin],
                center_freqs=full.center_freqs,
                residual=full.residual[:origin],
                iterations_used=full.iterations_used,
                converged=full.converged,
            )
        start = max(0, origin - self.window) if self.window > 0 else 0
        return self._decompose(values[start:origin])

    def clear(self) -> None:
        self._cache.clear()


def _decompose_for_fit(train: TimeSeries, config: EnsembleConfig, context: Optional[TimeSeries]) -> ModeSet:
    """Train-period decomposition under the configured scope"""
    if config.decomposition_scope == "full_series":
        if context is None:
            raise ConfigError("full_series scope needs the full series passed as context")
        full = vmd_decompose(context.values, config.vmd)
        n = len(train)
        return ModeSet(full.modes[:, :n], full.center_freqs, full.residual[:n], full.iterations_used, full.converged)
    return vmd_decompose(train.values, config.vmd)


def _period(train: TimeSeries, config: SarimaConfig) -> int:
    return config.period or train.points_per_day


def _windows(values: np.ndarray, ends: np.ndarray, width: int) -> np.ndarray:
    return np.stack([values[t - width:t] for t in ends])


def _fit_role(role: str, values: np.ndarray, period: int, config: EnsembleConfig):
    seed = derive_seed(config.seed, role)
    try:
        if role == "periodic":
            return fit_auto_sarima(values, period, replace(config.sarima, seed=seed))
        if role == "deterministic":
            return fit_lstm_forecaster(values, config.lstm, seed)
        return fit_mlp_forecaster(values, config.mlp, seed, label="volatility")
    except ForecastToolError as e:
        stage = {"periodic": "periodic/sarima", "deterministic": "deterministic/lstm", "volatility": "volatility/mlp"}[role]
        raise StageError(stage, e) from e


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    vmd_config: VmdConfig
    assignment: ComponentAssignment
    periodic_model: SarimaModel
    deterministic_model: LstmModel
    volatility_model: MlpModel
    recombiner: MlpModel
    decomposition_scope: str = "train_only"
    recombination: str = "mlp"
    train_length: int = 0
    component_tails: Dict[str, np.ndarray] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if sorted(self.assignment.modes) != [0, 1, 2]:
            raise DataError(f"assignment must cover modes 0, 1, 2 once each, got {self.assignment.modes}")
        if self.recombiner.input_size != 3:
            raise DataError(f"recombiner must take 3 inputs, got {self.recombiner.input_size}")
        if self.decomposition_scope not in SCOPES:
            raise DataError(f"unknown decomposition scope {self.decomposition_scope!r}")
        if self.recombination not in RECOMBINATIONS:
            raise DataError(f"unknown recombination {self.recombination!r}; choose from {RECOMBINATIONS}")


def _component_forecasts(model: EnsembleModel, components: np.ndarray, origins: np.ndarray, h: int) -> np.ndarray:
    """(3, n_origins, h) component forecasts from component histories"""
    periodic = sarima_forecast_origins(model.periodic_model, components[0], origins, h)
    deterministic = lstm_forecast_batch(
        model.deterministic_model, _windows(components[1], origins, model.deterministic_model.lag_window), h)
    volatility = mlp_forecast_batch(
        model.volatility_model, _windows(components[2], origins, model.volatility_model.lag_window), h)
    return np.stack([periodic, deterministic, volatility])


def _recombine(model: EnsembleModel, forecasts: np.ndarray) -> np.ndarray:
    """Combine every (origin, step) triple of a (3, n, h) stack"""
    if model.recombination == "additive":
        return forecasts.sum(axis=0)
    _, n, h = forecasts.shape
    rows = forecasts.reshape(3, n * h).T
    return mlp_predict(model.recombiner, rows).reshape(n, h)


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


def fit_adaensemble(train: TimeSeries, config: Optional[EnsembleConfig] = None,
                    context: Optional[TimeSeries] = None) -> EnsembleModel:
    """
    Decompose, assign, fit the three component models and the recombiner

    ``context`` is the full series and is only read under the
    ``full_series`` decomposition scope.

    The recombiner network is kept only if its in-sample RMSE stays within
    RECOMBINER_SLACK of the plain sum of the component forecasts; after a
    retry with a fresh seed the model recombines by that sum instead.

    Raises:
        DataError: if the training series is shorter than ten days
        StageError: wrapping the failure of any component fit
    """
    config = config or EnsembleConfig()
    ppd = train.points_per_day
    if len(train) < 10 * ppd:
        raise DataError(f"training series has {len(train)} points, need at least 10 days ({10 * ppd})")
    if config.decomposition_scope == "full_series" and context is None:
        raise ConfigError("full_series scope needs the full series passed as context")

    logger.info(f"Fitting AdaEnsemble on {len(train)} points ({config.decomposition_scope} decomposition)")
    try:
        modeset = _decompose_for_fit(train, config, context)
        assignment = component_assignment(modeset)
    except ForecastToolError as e:
        raise StageError("decomposition/vmd", e) from e
    components = _component_arrays(modeset, assignment)
    logger.info(f"Component center frequencies: {np.round(assignment.center_freqs, 5).tolist()}")

    period = _period(train, config.sarima)
    if config.n_jobs != 1:
        fitted = Parallel(n_jobs=config.n_jobs)(
            delayed(_fit_role)(role, components[i], period, config) for i, role in enumerate(ROLES))
    else:
        fitted = [_fit_role(role, components[i], period, config) for i, role in enumerate(ROLES)]
    periodic_model, deterministic_model, volatility_model = fitted

    first = max(
        periodic_model.order.ar_span + periodic_model.order.diff_span,
        periodic_model.order.diff_span + periodic_model.order.ma_span,
        periodic_model.order.diff_span + 1,
        deterministic_model.lag_window,
        volatility_model.lag_window,
    )
    origins = np.arange(first, len(train))
    if origins.size < 10:
        raise DataError(f"only {origins.size} in-sample points left for the recombiner")

    skeleton = EnsembleModel(
        vmd_config=config.vmd,
        assignment=assignment,
        periodic_model=periodic_model,
        deterministic_model=deterministic_model,
        volatility_model=volatility_model,
        recombiner=MlpModel.from_weights(np.zeros((1, 3)), np.zeros(1), np.zeros(1), 0.0),
    )
    one_step = _component_forecasts(skeleton, components, origins, 1)[:, :, 0]
    target = train.values[origins]
    additive_rmse = _rmse(one_step.sum(axis=0), target)
    recombination, recombined_rmse = "additive", additive_rmse
    seeds = (derive_seed(config.seed, "recombiner"), derive_seed(config.seed, "recombiner", "retry"))
    for attempt, seed in enumerate(seeds, start=1):
        try:
            recombiner = fit_recombiner(one_step.T, target, config.recombiner_hidden_sizes,
                                        config.recombiner_train, seed)
        except ForecastToolError as e:
            raise StageError("recombiner/mlp", e) from e
        network_rmse = _rmse(mlp_predict(recombiner, one_step.T), target)
        if network_rmse <= RECOMBINER_SLACK * additive_rmse:
            recombination, recombined_rmse = "mlp", network_rmse
            break
        logger.warning(
            f"Recombiner attempt {attempt}: in-sample RMSE {network_rmse:.4f} exceeds "
            f"{RECOMBINER_SLACK} x additive RMSE {additive_rmse:.4f}"
        )
    if recombination == "additive":
        logger.warning("Recombining by plain sum of the component forecasts")
    else:
        logger.info(f"Recombiner in-sample RMSE {recombined_rmse:.4f} (additive {additive_rmse:.4f})")

    tail = max(deterministic_model.lag_window, volatility_model.lag_window)
    return replace(
        skeleton,
        recombiner=recombiner,
        decomposition_scope=config.decomposition_scope,
        recombination=recombination,
        train_length=len(train),
        component_tails={role: components[i, -tail:].copy() for i, role in enumerate(ROLES)},
        diagnostics={
            "recombined_rmse": recombined_rmse,
            "additive_rmse": additive_rmse,
            "network_rmse": network_rmse,
        },
    )


def forecast_adaensemble(model: EnsembleModel, h: int) -> np.ndarray:
    """h-step combined forecasts following the end of the training data"""
    if h < 1:
        raise DataError(f"horizon must be at least 1, got {h}")
    periodic = forecast_sarima(model.periodic_model, h)
    deterministic = lstm_forecast_batch(model.deterministic_model, model.component_tails["deterministic"][None, :], h)[0]
    volatility = mlp_forecast_batch(model.volatility_model, model.component_tails["volatility"][None, :], h)[0]
    return _recombine(model, np.stack([periodic, deterministic, volatility])[:, None, :])[0]


class SarimaForecaster:
    kind = "sarima"

    def __init__(self, model: SarimaModel):
        self.model = model

    def forecast_origins(self, values, origins, horizon: int) -> np.ndarray:
        return sarima_forecast_origins(self.model, values, origins, horizon)


class MlpForecaster:
    kind = "mlp"

    def __init__(self, model: MlpModel):
        self.model = model

    def forecast_origins(self, values, origins, horizon: int) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        origins = np.asarray(origins, dtype=int)
        return mlp_forecast_batch(self.model, _windows(values, origins, self.model.lag_window), horizon)


class LstmForecaster:
    kind = "lstm"

    def __init__(self, model: LstmModel):
        self.model = model

    def forecast_origins(self, values, origins, horizon: int) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        origins = np.asarray(origins, dtype=int)
        return lstm_forecast_batch(self.model, _windows(values, origins, self.model.lag_window), horizon)


class VmdNeuralForecaster:
    """One network per VMD mode; the forecast is the sum over modes, residual taken as zero"""

    def __init__(self, kind: str, models: List[Union[MlpModel, LstmModel]], decomposer: RollingDecomposer):
        if kind not in ("vmd_mlp", "vmd_lstm"):
            raise ConfigError(f"unknown VMD network kind {kind!r}")
        self.kind = kind
        self.models = list(models)
        self.decomposer = decomposer

    def _mode_forecasts(self, modes: np.ndarray, horizon: int) -> np.ndarray:
        batch = lstm_forecast_batch if self.kind == "vmd_lstm" else mlp_forecast_batch
        return np.stack([
            batch(model, modes[j][None, -model.lag_window:], horizon)[0]
            for j, model in enumerate(self.models)
        ])

    def forecast_origins(self, values, origins, horizon: int) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        out = np.empty((len(origins), horizon))
        for row, origin in enumerate(origins):
            modeset = self.decomposer.modes_at(values, int(origin))
            out[row] = self._mode_forecasts(modeset.modes, horizon).sum(axis=0)
        return out


class AdaEnsembleForecaster:
    kind = "adaensemble"

    def __init__(self, model: EnsembleModel, decomposer: RollingDecomposer):
        self.model = model
        self.decomposer = decomposer

    def forecast_origins(self, values, origins, horizon: int) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        out = np.empty((len(origins), horizon))
        for row, origin in enumerate(origins):
            modeset = self.decomposer.modes_at(values, int(origin))
            components = _component_arrays(modeset, component_assignment(modeset))
            end = np.array([components.shape[1]])
            out[row] = _recombine(self.model, _component_forecasts(self.model, components, end, horizon))[0]
        return out


def decomposer_for(model_config: VmdConfig, scope: str, train_length: int) -> RollingDecomposer:
    return RollingDecomposer(model_config, scope, train_length if scope == "train_only" else 0)


def _fit_mode_networks(kind: str, modeset: ModeSet, config: EnsembleConfig) -> List[Union[MlpModel, LstmModel]]:
    models = []
    for j, mode in enumerate(modeset.modes):
        seed = derive_seed(config.seed, kind, j)
        try:
            if kind == "vmd_lstm":
                models.append(fit_lstm_forecaster(mode, config.lstm, seed))
            else:
                models.append(fit_mlp_forecaster(mode, config.mlp, seed, label=f"mode {j}"))
        except ForecastToolError as e:
            raise StageError(f"mode{j}/{kind.split('_')[1]}", e) from e
    logger.info(f"{kind}: trained {len(models)} mode networks")
    return models


def fit_single(kind: str, train: TimeSeries, config: Optional[EnsembleConfig] = None,
               context: Optional[TimeSeries] = None, decomposer: Optional[RollingDecomposer] = None):
    """
    Benchmark forecaster of one kind fit on ``train``

    Plain kinds model the raw series; vmd_mlp and vmd_lstm fit one network
    per mode.
    """
    config = config or EnsembleConfig()
    if kind not in SINGLE_KINDS:
        raise ConfigError(f"unknown benchmark model {kind!r}; choose from {SINGLE_KINDS}")
    seed = derive_seed(config.seed, kind)
    values = train.values
    logger.info(f"Fitting {kind} on {len(train)} points")
    try:
        if kind == "sarima":
            return SarimaForecaster(fit_auto_sarima(values, _period(train, config.sarima), replace(config.sarima, seed=seed)))
        if kind == "mlp":
            return MlpForecaster(fit_mlp_forecaster(values, config.mlp, seed))
        if kind == "lstm":
            return LstmForecaster(fit_lstm_forecaster(values, config.lstm, seed))
    except StageError:
        raise
    except ForecastToolError as e:
        raise StageError(kind, e) from e

    try:
        modeset = _decompose_for_fit(train, config, context)
    except ForecastToolError as e:
        raise StageError("decomposition/vmd", e) from e
    decomposer = decomposer or decomposer_for(config.vmd, config.decomposition_scope, len(train))
    return VmdNeuralForecaster(kind, _fit_mode_networks(kind, modeset, config), decomposer)


def fit_forecaster(kind: str, train: TimeSeries, config: Optional[EnsembleConfig] = None,
                   context: Optional[TimeSeries] = None, decomposer: Optional[RollingDecomposer] = None):
    """Any of the six model kinds, ready for rolling evaluation"""
    config = config or EnsembleConfig()
    if kind == "adaensemble":
        model = fit_adaensemble(train, config, context)
        return AdaEnsembleForecaster(model, decomposer or decomposer_for(config.vmd, config.decomposition_scope, len(train)))
    return fit_single(kind, train, config, context, decomposer)


def _vmd_meta(config: VmdConfig, scope: str, train_length: int) -> Dict[str, str]:
    return {
        "k": str(config.k),
        "alpha": format_float(config.alpha),
        "tau": format_float(config.tau),
        "tol": format_float(config.tol),
        "max_iter": str(config.max_iter),
        "init_omega": config.init_omega,
        "seed": str(config.seed),
        "pin_dc": str(config.pin_dc).lower(),
        "mirror_extend": str(config.mirror_extend).lower(),
        "decomposition_scope": scope,
        "train_length": str(train_length),
    }


def _read_vmd_meta(path: Path) -> Tuple[VmdConfig, str, int]:
    meta, _ = read_weights(path)
    try:
        config = VmdConfig(
            k=int(meta["k"]),
            alpha=float(meta["alpha"]),
            tau=float(meta["tau"]),
            tol=float(meta["tol"]),
            max_iter=int(meta["max_iter"]),
            init_omega=meta["init_omega"],
            seed=int(meta["seed"]),
            pin_dc=meta["pin_dc"] == "true",
            mirror_extend=meta["mirror_extend"] == "true",
        )
        return config, meta["decomposition_scope"], int(meta["train_length"])
    except (KeyError, ValueError) as e:
        raise DataError(f"malformed VMD metadata {path}: {e}")


def save_ensemble(model: EnsembleModel, directory, header: Optional[str] = None) -> Path:
    """Directory with vmd.meta, assignment.txt and one file per sub-model"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_weights(directory / "kind.txt", {"kind": "adaensemble"}, {}, header)
    write_weights(directory / "vmd.meta", _vmd_meta(model.vmd_config, model.decomposition_scope, model.train_length), {}, header)
    assignment = {
        role: f"{model.assignment.modes[i]} {format_float(model.assignment.center_freqs[i])}"
        for i, role in enumerate(ROLES)
    }
    assignment["recombination"] = model.recombination
    for role in ROLES:
        assignment[f"tail.{role}"] = " ".join(format_float(v) for v in model.component_tails[role])
    for key, value in model.diagnostics.items():
        assignment[f"diagnostic.{key}"] = format_float(value)
    write_weights(directory / "assignment.txt", assignment, {}, header)
    save_sarima(model.periodic_model, directory / "periodic.sarima", header)
    save_lstm(model.deterministic_model, directory / "deterministic.lstm", header)
    save_mlp(model.volatility_model, directory / "volatility.mlp", header)
    save_mlp(model.recombiner, directory / "recombiner.mlp", header)
    return directory


def load_ensemble(directory) -> EnsembleModel:
    directory = Path(directory)
    vmd_config, scope, train_length = _read_vmd_meta(directory / "vmd.meta")
    meta, _ = read_weights(directory / "assignment.txt")
    try:
        pairs = [meta[role].split() for role in ROLES]
        assignment = ComponentAssignment(
            modes=tuple(int(p[0]) for p in pairs),
            center_freqs=tuple(float(p[1]) for p in pairs),
        )
        tails = {role: np.array([float(v) for v in meta[f"tail.{role}"].split()]) for role in ROLES}
        diagnostics = {k.split(".", 1)[1]: float(v) for k, v in meta.items() if k.startswith("diagnostic.")}
    except (KeyError, ValueError, IndexError) as e:
        raise DataError(f"malformed assignment file in {directory}: {e}")
    return EnsembleModel(
        vmd_config=vmd_config,
        assignment=assignment,
        periodic_model=load_sarima(directory / "periodic.sarima"),
        deterministic_model=load_lstm(directory / "deterministic.lstm"),
        volatility_model=load_mlp(directory / "volatility.mlp"),
        recombiner=load_mlp(directory / "recombiner.mlp"),
        decomposition_scope=scope,
        recombination=meta.get("recombination", "mlp"),
        train_length=train_length,
        component_tails=tails,
        diagnostics=diagnostics,
    )


def save_forecaster(forecaster, directory, header: Optional[str] = None) -> Path:
    """Serialize any forecaster kind into ``directory`` (``kind.txt`` names the kind)"""
    if isinstance(forecaster, AdaEnsembleForecaster):
        return save_ensemble(forecaster.model, directory, header)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_weights(directory / "kind.txt", {"kind": forecaster.kind}, {}, header)
    if isinstance(forecaster, SarimaForecaster):
        save_sarima(forecaster.model, directory / "model.sarima", header)
    elif isinstance(forecaster, MlpForecaster):
        save_mlp(forecaster.model, directory / "model.mlp", header)
    elif isinstance(forecaster, LstmForecaster):
        save_lstm(forecaster.model, directory / "model.lstm", header)
    else:
        decomposer = forecaster.decomposer
        write_weights(directory / "vmd.meta", _vmd_meta(decomposer.config, decomposer.scope, decomposer.window), {}, header)
        for j, model in enumerate(forecaster.models):
            if forecaster.kind == "vmd_lstm":
                save_lstm(model, directory / f"mode_{j}.lstm", header)
            else:
                save_mlp(model, directory / f"mode_{j}.mlp", header)
    return directory


def load_forecaster(directory):
    directory = Path(directory)
    if not (directory / "kind.txt").exists():
        raise FileNotFoundError(f"no model directory at {directory} (kind.txt missing)")
    kind = read_weights(directory / "kind.txt")[0].get("kind")
    if kind == "adaensemble":
        model = load_ensemble(directory)
        return AdaEnsembleForecaster(model, decomposer_for(model.vmd_config, model.decomposition_scope, model.train_length))
    if kind == "sarima":
        return SarimaForecaster(load_sarima(directory / "model.sarima"))
    if kind == "mlp":
        return MlpForecaster(load_mlp(directory / "model.mlp"))
    if kind == "lstm":
        return LstmForecaster(load_lstm(directory / "model.lstm"))
    if kind in ("vmd_mlp", "vmd_lstm"):
        vmd_config, scope, window = _read_vmd_meta(directory / "vmd.meta")
        suffix, loader = ("lstm", load_lstm) if kind == "vmd_lstm" else ("mlp", load_mlp)
        models = [loader(directory / f"mode_{j}.{suffix}") for j in range(vmd_config.k)]
        return VmdNeuralForecaster(kind, models, RollingDecomposer(vmd_config, scope, window))
    raise DataError(f"unknown model kind {kind!r} in {directory}")
