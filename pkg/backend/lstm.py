"""
Single-layer peephole LSTM

    i_t = sigma(W_ix x_t + W_im m_{t-1} + W_ic c_{t-1} + b_i)
    f_t = sigma(W_fx x_t + W_fm m_{t-1} + W_fc c_{t-1} + b_f)
    c_t = f_t * c_{t-1} + i_t * g(W_cx x_t + W_cm m_{t-1} + b_c)
    o_t = sigma(W_ox x_t + W_om m_{t-1} + W_oc c_t + b_o)
    m_t = o_t * h(c_t)
    y_t = W_ym m_t + b_y

Peephole matrices are diagonal and stored as vectors. The output is linear.
Each window is unrolled from a zero state; training is BPTT through the
full window with a loss on the final output only.
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
    make_windows,
    read_weights,
    run_sgd,
    search_hidden_size,
    train_config_from_meta,
    train_config_meta,
    write_weights,
)

logger = logging.getLogger(__name__)

GATE_PARAMS = (
    "W_ix", "W_im", "w_ic", "b_i",
    "W_fx", "W_fm", "w_fc", "b_f",
    "W_cx", "W_cm", "b_c",
    "W_ox", "W_om", "w_oc", "b_o",
)
PARAM_NAMES = GATE_PARAMS + ("W_ym", "b_y")
HIDDEN_GRID = (4, 8, 12, 16, 20, 25)


def sigma(x):
    """Logistic sigmoid, range (0, 1)"""
    return expit(x)


def g_centered(x):
    """Centered sigmoid with range (-2, 2)"""
    return 4.0 * expit(x) - 2.0


def h_centered(x):
    """Centered sigmoid with range (-1, 1)"""
    return 2.0 * expit(x) - 1.0


@dataclass(frozen=True)
class LstmConfig:
    """Coarse hidden-size grid over 4..25; candidates stop early on the validation split"""
    hidden_sizes: Tuple[int, ...] = HIDDEN_GRID
    lag_window: int = 24
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=50, clip_norm=5.0, patience=5))


@dataclass(frozen=True)
class LstmState:
    m: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(m=np.zeros(hidden_size), c=np.zeros(hidden_size))


@dataclass(frozen=True, eq=False)
class LstmModel:
    params: Dict[str, np.ndarray]
    lag_window: int = 1
    scaler: Optional[MinMaxScaler] = None
    seed: int = 0
    train_config: TrainConfig = field(default_factory=TrainConfig)
    train_mse: float = math.nan

    def __post_init__(self):
        missing = set(PARAM_NAMES) - set(self.params)
        if missing:
            raise DataError(f"LSTM parameters missing: {sorted(missing)}")
        n_h = self.hidden_size
        for name in ("w_ic", "w_fc", "w_oc"):
            if self.params[name].shape != (n_h,):
                raise DataError(f"peephole {name} must be a length-{n_h} diagonal, got {self.params[name].shape}")
        for name in PARAM_NAMES:
            if not np.all(np.isfinite(self.params[name])):
                raise DataError(f"LSTM parameters {name} are not finite")
        if self.lag_window < 1:
            raise DataError(f"lag_window must be positive, got {self.lag_window}")

    @property
    def hidden_size(self) -> int:
        return int(self.params["b_i"].shape[0])

    @property
    def input_size(self) -> int:
        return int(self.params["W_ix"].shape[1])


def zero_params(hidden_size: int, input_size: int = 1) -> Params:
    n_h, n_x = hidden_size, input_size
    params = {}
    for gate in "ifco":
        params[f"W_{gate}x"] = np.zeros((n_h, n_x))
        params[f"W_{gate}m"] = np.zeros((n_h, n_h))
        params[f"b_{gate}"] = np.zeros(n_h)
        if gate != "c":
            params[f"w_{gate}c"] = np.zeros(n_h)
    params["W_ym"] = np.zeros(n_h)
    params["b_y"] = np.zeros(1)
    return params


def init_params(hidden_size: int, seed: int, input_size: int = 1) -> Params:
    """Uniform in [-1/sqrt(n_h), 1/sqrt(n_h)], forget bias +1"""
    if hidden_size < 1:
        raise ConfigError(f"hidden_size must be positive, got {hidden_size}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(hidden_size)
    params = zero_params(hidden_size, input_size)
    for name in PARAM_NAMES:
        params[name] = rng.uniform(-bound, bound, params[name].shape)
    params["b_f"] = np.ones(hidden_size)
    return params


def lstm_step(model: LstmModel, x_t, prev: LstmState) -> Tuple[float, LstmState]:
    """One time step, in the order i, f, c, o, m, y"""
    p = model.params
    x = np.atleast_1d(np.asarray(x_t, dtype=float))
    if x.shape != (model.input_size,):
        raise DataError(f"LSTM expects input of size {model.input_size}, got shape {x.shape}")
    if prev.m.shape != (model.hidden_size,) or prev.c.shape != (model.hidden_size,):
        raise DataError(f"LSTM state must have size {model.hidden_size}")
    m_prev, c_prev = prev.m, prev.c
    i = sigma(p["W_ix"] @ x + p["W_im"] @ m_prev + p["w_ic"] * c_prev + p["b_i"])
    f = sigma(p["W_fx"] @ x + p["W_fm"] @ m_prev + p["w_fc"] * c_prev + p["b_f"])
    c = f * c_prev + i * g_centered(p["W_cx"] @ x + p["W_cm"] @ m_prev + p["b_c"])
    o = sigma(p["W_ox"] @ x + p["W_om"] @ m_prev + p["w_oc"] * c + p["b_o"])
    m = o * h_centered(c)
    y = float(p["W_ym"] @ m + p["b_y"][0])
    return y, LstmState(m=m, c=c)


def lstm_forward(model: LstmModel, window: Sequence[float]) -> float:
    """Unroll from the zero state over one scaled window; output at the last step"""
    window = np.asarray(window, dtype=float)
    if window.shape != (model.lag_window,):
        raise DataError(f"LSTM expects a window of {model.lag_window} values, got shape {window.shape}")
    state = LstmState.zeros(model.hidden_size)
    y = 0.0
    for x_t in window:
        y, state = lstm_step(model, [x_t], state)
    return y


def _unroll(params: Params, x: np.ndarray):
    """Batched forward over windows x of shape (batch, steps); keeps the cache for BPTT"""
    batch, steps = x.shape
    n_h = params["b_i"].shape[0]
    m = np.zeros((batch, n_h))
    c = np.zeros((batch, n_h))
    cache = []
    for t in range(steps):
        x_t = x[:, t:t + 1]
        m_prev, c_prev = m, c
        i = expit(x_t @ params["W_ix"].T + m_prev @ params["W_im"].T + c_prev * params["w_ic"] + params["b_i"])
        f = expit(x_t @ params["W_fx"].T + m_prev @ params["W_fm"].T + c_prev * params["w_fc"] + params["b_f"])
        s_c = expit(x_t @ params["W_cx"].T + m_prev @ params["W_cm"].T + params["b_c"])
        g = 4.0 * s_c - 2.0
        c = f * c_prev + i * g
        o = expit(x_t @ params["W_ox"].T + m_prev @ params["W_om"].T + c * params["w_oc"] + params["b_o"])
        s_h = expit(c)
        m = o * (2.0 * s_h - 1.0)
        cache.append((x_t, m_prev, c_prev, i, f, s_c, g, c, o, s_h))
    y = m @ params["W_ym"] + params["b_y"][0]
    return y, m, cache


def loss_and_grad(params: Params, x: np.ndarray, y: np.ndarray) -> Tuple[float, Params]:
    """Batch MSE of the final-step output and its BPTT gradient"""
    y_hat, m_last, cache = _unroll(params, x)
    err = y_hat - y
    loss = float(np.mean(err ** 2))
    d_y = 2.0 * err / y.size

    grads = {name: np.zeros_like(value) for name, value in params.items()}
    grads["W_ym"] = m_last.T @ d_y
    grads["b_y"] = np.array([d_y.sum()])
    d_m = np.outer(d_y, params["W_ym"])
    d_c_next = np.zeros_like(d_m)

    for x_t, m_prev, c_prev, i, f, s_c, g, c, o, s_h in reversed(cache):
        h_c = 2.0 * s_h - 1.0
        d_o = d_m * h_c
        d_a_o = d_o * o * (1.0 - o)
        d_c = d_c_next + d_m * o * 2.0 * s_h * (1.0 - s_h) + d_a_o * params["w_oc"]

        d_a_i = d_c * g * i * (1.0 - i)
        d_a_f = d_c * c_prev * f * (1.0 - f)
        d_a_c = d_c * i * 4.0 * s_c * (1.0 - s_c)

        for gate, d_a in (("i", d_a_i), ("f", d_a_f), ("c", d_a_c), ("o", d_a_o)):
            grads[f"W_{gate}x"] += d_a.T @ x_t
            grads[f"W_{gate}m"] += d_a.T @ m_prev
            grads[f"b_{gate}"] += d_a.sum(axis=0)
        grads["w_ic"] += np.sum(d_a_i * c_prev, axis=0)
        grads["w_fc"] += np.sum(d_a_f * c_prev, axis=0)
        grads["w_oc"] += np.sum(d_a_o * c, axis=0)

        d_c_next = d_c * f + d_a_i * params["w_ic"] + d_a_f * params["w_fc"]
        d_m = (d_a_i @ params["W_im"] + d_a_f @ params["W_fm"]
               + d_a_c @ params["W_cm"] + d_a_o @ params["W_om"])
    return loss, grads


def lstm_gradient(model: LstmModel, batch: Tuple[np.ndarray, np.ndarray]) -> Params:
    x, y = batch
    _, grads = loss_and_grad(model.params, np.atleast_2d(np.asarray(x, dtype=float)), np.asarray(y, dtype=float))
    return grads


def _train_fixed(x: np.ndarray, y: np.ndarray, hidden_size: int, config: TrainConfig, seed: int,
                 validation: Optional[Tuple[np.ndarray, np.ndarray]] = None, **model_fields) -> LstmModel:
    params = init_params(hidden_size, seed)
    validation_loss = None
    if validation is not None:
        x_val, y_val = validation

        def validation_loss(current: Params) -> float:
            return float(np.mean((_unroll(current, x_val)[0] - y_val) ** 2))

    mse = run_sgd(params, loss_and_grad, x, y, config, derive_seed(seed, "sgd"), validation_loss)
    return LstmModel(params=params, lag_window=x.shape[1], seed=seed, train_config=config, train_mse=mse, **model_fields)


def _rmse(model: LstmModel, x: np.ndarray, y: np.ndarray) -> float:
    y_hat, _, _ = _unroll(model.params, x)
    return float(np.sqrt(np.mean((y_hat - y) ** 2)))


def lstm_train(
    data: Tuple[np.ndarray, np.ndarray],
    hidden_candidates: Iterable[int] = range(4, 26),
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    **model_fields,
) -> LstmModel:
    """
    Pick the hidden size on a chronological holdout, then train on all data

    ``data`` holds scaled windows (n, lag_window) and next-value targets.

    Raises:
        NumericalError: if training diverges
    """
    config = config or TrainConfig(clip_norm=5.0)
    x, y = (np.asarray(a, dtype=float) for a in data)
    x = np.atleast_2d(x)
    if x.shape[0] != y.size:
        raise DataError(f"{x.shape[0]} windows but {y.size} targets")
    candidates = sorted({int(q) for q in hidden_candidates})
    if len(candidates) == 1:
        hidden = candidates[0]
    else:
        (x_fit, y_fit), (x_val, y_val) = chronological_split(x, y, config.validation_fraction)
        hidden, _, _ = search_hidden_size(
            candidates,
            lambda q, s: _train_fixed(x_fit, y_fit, q, config, s, validation=(x_val, y_val)),
            lambda model: _rmse(model, x_val, y_val),
            derive_seed(seed, "search"),
            config,
            "lstm",
        )
    model = _train_fixed(x, y, hidden, config, derive_seed(seed, "final"), **model_fields)
    logger.info(f"LSTM trained: window {x.shape[1]}, hidden {hidden}, training MSE {model.train_mse:.6g}")
    return model


def lstm_forecast_batch(model: LstmModel, histories: np.ndarray, h: int) -> np.ndarray:
    """Recursive h-step forecasts for each row of raw histories"""
    if h < 1:
        raise DataError(f"horizon must be at least 1, got {h}")
    histories = np.atleast_2d(np.asarray(histories, dtype=float))
    window = model.lag_window
    if histories.shape[1] < window:
        raise DataError(f"history of length {histories.shape[1]} is shorter than lag window {window}")
    buffer = histories[:, -window:]
    if model.scaler is not None:
        buffer = model.scaler.apply(buffer)
    buffer = np.concatenate([buffer, np.zeros((buffer.shape[0], h))], axis=1)
    for step in range(h):
        y, _, _ = _unroll(model.params, buffer[:, step:step + window])
        buffer[:, window + step] = y
    out = buffer[:, window:]
    return model.scaler.invert(out) if model.scaler is not None else out


def lstm_forecast_recursive(model: LstmModel, history: Sequence[float], h: int) -> np.ndarray:
    return lstm_forecast_batch(model, np.asarray(history, dtype=float)[None, :], h)[0]


def fit_lstm_forecaster(series: Sequence[float], config: Optional[LstmConfig] = None, seed: int = 0) -> LstmModel:
    """Scale on ``series`` (training data), build windows, select size and train"""
    config = config or LstmConfig()
    values = np.asarray(series, dtype=float)
    scaler = scale_fit(values)
    x, y = make_windows(scaler.apply(values), config.lag_window)
    return lstm_train((x, y), config.hidden_sizes, config.train, seed, scaler=scaler)


def save_lstm(model: LstmModel, path, header: Optional[str] = None) -> None:
    scaler = model.scaler
    meta = {
        "kind": "lstm",
        "input_size": str(model.input_size),
        "hidden_size": str(model.hidden_size),
        "lag_window": str(model.lag_window),
        "seed": str(model.seed),
        "train_mse": format_float(model.train_mse),
        "scaler": "none" if scaler is None else " ".join(
            format_float(v) for v in (scaler.low, scaler.high, scaler.target_lo, scaler.target_hi)),
    }
    meta.update(train_config_meta(model.train_config))
    write_weights(path, meta, {name: model.params[name] for name in PARAM_NAMES}, header)


def load_lstm(path) -> LstmModel:
    meta, blocks = read_weights(path)
    if meta.get("kind") != "lstm":
        raise DataError(f"{path} is not an LSTM weight file")
    scaler = None
    if meta["scaler"] != "none":
        scaler = MinMaxScaler(*(float(v) for v in meta["scaler"].split()))
    return LstmModel(
        params={name: blocks[name] for name in PARAM_NAMES},
        lag_window=int(meta["lag_window"]),
        scaler=scaler,
        seed=int(meta["seed"]),
        train_config=train_config_from_meta(meta),
        train_mse=float(meta["train_mse"]),
    )
