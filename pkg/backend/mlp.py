"""
Single-hidden-layer perceptron

y_t = alpha_0 + sum_j alpha_j * g(beta_0j + sum_i beta_ij * x_i), with the
logistic g and a linear output. Used autoregressively for the volatility
component and the benchmarks, and with three component inputs as the
ensemble recombiner.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from errors import ConfigError, DataError
from timeseries import MinMaxScaler, scale_fit
from training import (
    Params,
    TrainConfig,
    chronological_split,
    derive_seed,
    format_float,
    make_lagged_pairs,
    read_weights,
    run_sgd,
    search_hidden_size,
    select_lags,
    train_config_from_meta,
    train_config_meta,
    write_weights,
)

logger = logging.getLogger(__name__)

PARAM_NAMES = ("beta", "beta0", "alpha", "alpha0")


@dataclass(frozen=True)
class MlpConfig:
    hidden_sizes: Tuple[int, ...] = tuple(range(4, 16))
    max_lag: int = 24
    n_lags: Optional[int] = None
    lag_method: str = "acf"
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass(frozen=True, eq=False)
class MlpModel:
    """
    Weights plus the scaling needed to use them on raw data

    ``scaler`` maps targets (and, for autoregressive use, inputs) into the
    training range. ``input_scalers`` maps each input column separately
    when the inputs are not lags of the target, as in the recombiner.
    """
    params: Dict[str, np.ndarray]
    lags: Tuple[int, ...] = ()
    scaler: Optional[MinMaxScaler] = None
    input_scalers: Optional[Tuple[MinMaxScaler, ...]] = None
    seed: int = 0
    train_config: TrainConfig = field(default_factory=TrainConfig)
    train_mse: float = math.nan

    def __post_init__(self):
        beta = self.params["beta"]
        if beta.ndim != 2 or min(beta.shape) < 1:
            raise DataError(f"beta must be a non-empty q x p matrix, got shape {beta.shape}")
        for name in PARAM_NAMES:
            if not np.all(np.isfinite(self.params[name])):
                raise DataError(f"MLP weights {name} are not finite")

    @property
    def input_size(self) -> int:
        return int(self.params["beta"].shape[1])

    @property
    def hidden_size(self) -> int:
        return int(self.params["beta"].shape[0])

    @property
    def lag_window(self) -> int:
        return max(self.lags) if self.lags else self.input_size

    @classmethod
    def from_weights(cls, beta, beta0, alpha, alpha0: float, **kwargs) -> "MlpModel":
        params = {
            "beta": np.atleast_2d(np.asarray(beta, dtype=float)).copy(),
            "beta0": np.atleast_1d(np.asarray(beta0, dtype=float)).copy(),
            "alpha": np.atleast_1d(np.asarray(alpha, dtype=float)).copy(),
            "alpha0": np.array([float(alpha0)]),
        }
        return cls(params=params, **kwargs)


def init_params(p: int, q: int, seed: int) -> Params:
    """Uniform in [-1/sqrt(p), 1/sqrt(p)]"""
    if p < 1 or q < 1:
        raise ConfigError(f"MLP needs p >= 1 and q >= 1, got p={p} q={q}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(p)
    return {
        "beta": rng.uniform(-bound, bound, (q, p)),
        "beta0": rng.uniform(-bound, bound, q),
        "alpha": rng.uniform(-bound, bound, q),
        "alpha0": rng.uniform(-bound, bound, 1),
    }


def _forward_batch(params: Params, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    hidden = expit(x @ params["beta"].T + params["beta0"])
    return hidden @ params["alpha"] + params["alpha0"][0], hidden


def mlp_forward(model: MlpModel, inputs: Sequence[float]) -> float:
    """Network output for one input vector, already in model units"""
    x = np.asarray(inputs, dtype=float)
    if x.shape != (model.input_size,):
        raise DataError(f"MLP expects {model.input_size} inputs, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("MLP inputs must be finite")
    p = model.params
    hidden = expit(p["beta"] @ x + p["beta0"])
    return float(p["alpha0"][0] + p["alpha"] @ hidden)


def loss_and_grad(params: Params, x: np.ndarray, y: np.ndarray) -> Tuple[float, Params]:
    """Batch MSE and its analytic gradient"""
    y_hat, hidden = _forward_batch(params, x)
    err = y_hat - y
    loss = float(np.mean(err ** 2))
    d_out = 2.0 * err / y.size
    d_hidden = np.outer(d_out, params["alpha"]) * hidden * (1.0 - hidden)
    grads = {
        "beta": d_hidden.T @ x,
        "beta0": d_hidden.sum(axis=0),
        "alpha": hidden.T @ d_out,
        "alpha0": np.array([d_out.sum()]),
    }
    return loss, grads


def mlp_gradient(model: MlpModel, batch: Tuple[np.ndarray, np.ndarray]) -> Params:
    x, y = batch
    _, grads = loss_and_grad(model.params, np.atleast_2d(np.asarray(x, dtype=float)), np.asarray(y, dtype=float))
    return grads


def mlp_train(
    data: Tuple[np.ndarray, np.ndarray],
    p: int,
    q: int,
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    validation: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    **model_fields,
) -> MlpModel:
    """
    Mini-batch SGD on MSE from a seeded uniform initialization

    ``validation`` (inputs, targets) enables early stopping when
    ``config.patience`` is positive.

    Raises:
        DataError: if the inputs do not have p columns
        NumericalError: if training diverges
    """
    config = config or TrainConfig()
    x, y = (np.asarray(a, dtype=float) for a in data)
    x = np.atleast_2d(x)
    if x.shape[1] != p or x.shape[0] != y.size:
        raise DataError(f"training data shape {x.shape} does not match p={p} with {y.size} targets")
    params = init_params(p, q, seed)
    validation_loss = None
    if validation is not None:
        x_val, y_val = (np.asarray(a, dtype=float) for a in validation)

        def validation_loss(current: Params) -> float:
            return float(np.mean((_forward_batch(current, x_val)[0] - y_val) ** 2))

    mse = run_sgd(params, loss_and_grad, x, y, config, derive_seed(seed, "sgd"), validation_loss)
    return MlpModel(params=params, seed=seed, train_config=config, train_mse=mse, **model_fields)


def _rmse(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    y_hat, _ = _forward_batch(model.params, x)
    return float(np.sqrt(np.mean((y_hat - y) ** 2)))


def select_hidden_size(
    data: Tuple[np.ndarray, np.ndarray],
    p: int,
    candidates: Iterable[int] = range(4, 16),
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    label: str = "mlp",
) -> Tuple[int, float]:
    """Hidden size with the lowest validation RMSE on a chronological holdout; ties go to the smallest"""
    config = config or TrainConfig()
    x, y = (np.asarray(a, dtype=float) for a in data)
    (x_fit, y_fit), (x_val, y_val) = chronological_split(np.atleast_2d(x), y, config.validation_fraction)
    chosen, score, _ = search_hidden_size(
        candidates,
        lambda q, s: mlp_train((x_fit, y_fit), p, q, config, s, validation=(x_val, y_val)),
        lambda model: _rmse(model, x_val, y_val),
        seed,
        config,
        label,
    )
    return chosen, score


def _scale_inputs(model: MlpModel, x: np.ndarray) -> np.ndarray:
    if model.input_scalers is not None:
        return np.column_stack([s.apply(x[:, j]) for j, s in enumerate(model.input_scalers)])
    if model.scaler is not None:
        return model.scaler.apply(x)
    return x


def mlp_predict(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    """Outputs in original units for raw input rows"""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y, _ = _forward_batch(model.params, _scale_inputs(model, x))
    return model.scaler.invert(y) if model.scaler is not None else y


def mlp_forecast_batch(model: MlpModel, histories: np.ndarray, h: int) -> np.ndarray:
    """Recursive h-step forecasts for each row of raw histories"""
    if h < 1:
        raise DataError(f"horizon must be at least 1, got {h}")
    histories = np.atleast_2d(np.asarray(histories, dtype=float))
    window = model.lag_window
    if histories.shape[1] < window:
        raise DataError(f"history of length {histories.shape[1]} is shorter than lag window {window}")
    lags = np.asarray(model.lags or range(1, model.input_size + 1))
    buffer = histories[:, -window:]
    if model.scaler is not None:
        buffer = model.scaler.apply(buffer)
    buffer = np.concatenate([buffer, np.zeros((buffer.shape[0], h))], axis=1)
    for step in range(h):
        now = window + step
        y, _ = _forward_batch(model.params, buffer[:, now - lags])
        buffer[:, now] = y
    out = buffer[:, window:]
    return model.scaler.invert(out) if model.scaler is not None else out


def mlp_forecast_recursive(model: MlpModel, history: Sequence[float], h: int) -> np.ndarray:
    """Feed each prediction back into the lag window h times"""
    return mlp_forecast_batch(model, np.asarray(history, dtype=float)[None, :], h)[0]


def fit_mlp_forecaster(series: Sequence[float], config: Optional[MlpConfig] = None, seed: int = 0, label: str = "mlp") -> MlpModel:
    """
    Autoregressive MLP on a raw series: scale, pick lags, pick q, train

    The scaler is fit on ``series`` only, so pass training data.
    """
    config = config or MlpConfig()
    values = np.asarray(series, dtype=float)
    scaler = scale_fit(values)
    scaled = scaler.apply(values)
    lags = select_lags(scaled, config.max_lag, config.n_lags, config.lag_method)
    x, y = make_lagged_pairs(scaled, lags)
    q, _ = select_hidden_size((x, y), len(lags), config.hidden_sizes, config.train, derive_seed(seed, "search"), label)
    model = mlp_train((x, y), len(lags), q, config.train, derive_seed(seed, "final"), lags=lags, scaler=scaler)
    logger.info(f"{label}: trained p={len(lags)} lags={list(lags)} q={q}, training MSE {model.train_mse:.6g}")
    return model


def fit_recombiner(inputs: np.ndarray, target: Sequence[float], hidden_sizes: Iterable[int] = range(2, 9),
                   config: Optional[TrainConfig] = None, seed: int = 0) -> MlpModel:
    """MLP from component forecasts (columns of ``inputs``) to the observed series"""
    config = config or TrainConfig()
    x_raw = np.atleast_2d(np.asarray(inputs, dtype=float))
    y_raw = np.asarray(target, dtype=float)
    input_scalers = tuple(scale_fit(x_raw[:, j]) for j in range(x_raw.shape[1]))
    scaler = scale_fit(y_raw)
    x = np.column_stack([s.apply(x_raw[:, j]) for j, s in enumerate(input_scalers)])
    y = scaler.apply(y_raw)
    q, _ = select_hidden_size((x, y), x.shape[1], hidden_sizes, config, derive_seed(seed, "search"), "recombiner")
    return mlp_train((x, y), x.shape[1], q, config, derive_seed(seed, "final"),
                     scaler=scaler, input_scalers=input_scalers)


def _scaler_text(scaler: MinMaxScaler) -> str:
    return " ".join(format_float(v) for v in (scaler.low, scaler.high, scaler.target_lo, scaler.target_hi))


def _scaler_from_text(text: str) -> MinMaxScaler:
    low, high, lo, hi = (float(v) for v in text.split())
    return MinMaxScaler(low, high, lo, hi)


def save_mlp(model: MlpModel, path, header: Optional[str] = None) -> None:
    meta = {
        "kind": "mlp",
        "input_size": str(model.input_size),
        "hidden_size": str(model.hidden_size),
        "lags": " ".join(str(l) for l in model.lags) or "none",
        "seed": str(model.seed),
        "train_mse": format_float(model.train_mse),
        "scaler": _scaler_text(model.scaler) if model.scaler else "none",
    }
    for j, s in enumerate(model.input_scalers or ()):
        meta[f"input_scaler.{j}"] = _scaler_text(s)
    meta.update(train_config_meta(model.train_config))
    write_weights(path, meta, {name: model.params[name] for name in PARAM_NAMES}, header)


def load_mlp(path) -> MlpModel:
    meta, blocks = read_weights(path)
    if meta.get("kind") != "mlp":
        raise DataError(f"{path} is not an MLP weight file")
    indexed = sorted((int(k.split(".")[1]), v) for k, v in meta.items() if k.startswith("input_scaler."))
    input_scalers = [_scaler_from_text(v) for _, v in indexed]
    return MlpModel(
        params={name: blocks[name] for name in PARAM_NAMES},
        lags=() if meta["lags"] == "none" else tuple(int(v) for v in meta["lags"].split()),
        scaler=None if meta["scaler"] == "none" else _scaler_from_text(meta["scaler"]),
        input_scalers=tuple(input_scalers) or None,
        seed=int(meta["seed"]),
        train_config=train_config_from_meta(meta),
        train_mse=float(meta["train_mse"]),
    )
