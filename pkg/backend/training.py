"""
Training utilities shared by the MLP and LSTM forecasters

Mini-batch SGD with optional momentum and gradient-norm clipping, seed
splitting, lagged training pairs, lag selection and the validation protocol
that picks a hidden-layer size.
"""

import logging
import math
import zlib
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from errors import ConfigError, DataError, NumericalError
from timeseries import autocorrelation

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1

Params = Dict[str, np.ndarray]
LossAndGrad = Callable[[Params, np.ndarray, np.ndarray], Tuple[float, Params]]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 500
    batch_size: int = 32
    momentum: float = 0.0
    clip_norm: Optional[float] = None
    validation_fraction: float = 0.2
    tie_tolerance: float = 1e-3
    n_jobs: int = 1
    patience: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be nonnegative, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ConfigError(f"clip_norm must be positive or None, got {self.clip_norm}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError(f"validation_fraction must lie in (0, 1), got {self.validation_fraction}")
        if self.patience < 0:
            raise ConfigError(f"patience must be nonnegative, got {self.patience}")


def splitmix64(state: int) -> Tuple[int, int]:
    """One splitmix64 step: (next state, output)"""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def derive_seed(master: int, *labels) -> int:
    """Independent 63-bit seed for a subsystem, derived from the master seed"""
    state = int(master) & _MASK64
    for label in labels:
        token = label if isinstance(label, int) else zlib.crc32(str(label).encode("utf-8"))
        state, out = splitmix64(state ^ (token & _MASK64))
        state = out
    _, out = splitmix64(state)
    return out >> 1


def make_lagged_pairs(values: Sequence[float], lags: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Rows [y_{t-l} for l in lags] with target y_t"""
    values = np.asarray(values, dtype=float)
    lags = np.asarray(lags, dtype=int)
    start = int(lags.max())
    if values.size <= start:
        raise DataError(f"series of length {values.size} is too short for lag {start}")
    index = np.arange(start, values.size)
    return values[index[:, None] - lags[None, :]], values[index]


def make_windows(values: Sequence[float], window: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rows of ``window`` consecutive values (oldest first) with the next value as target"""
    values = np.asarray(values, dtype=float)
    if values.size <= window:
        raise DataError(f"series of length {values.size} is too short for window {window}")
    index = np.arange(window, values.size)
    return values[index[:, None] - np.arange(window, 0, -1)[None, :]], values[index]


def chronological_split(x: np.ndarray, y: np.ndarray, validation_fraction: float = 0.2):
    n_val = max(1, int(round(len(y) * validation_fraction)))
    if len(y) - n_val < 1:
        raise DataError(f"{len(y)} samples cannot be split for validation")
    return (x[:-n_val], y[:-n_val]), (x[-n_val:], y[-n_val:])


def select_lags(values: Sequence[float], max_lag: int = 24, n_lags: Optional[int] = None, method: str = "acf") -> Tuple[int, ...]:
    """
    Choose input lags for an autoregressive network

    ``acf`` keeps the lags up to ``max_lag`` whose |autocorrelation| clears the
    95% white-noise band, strongest first, at most ``n_lags`` of them (lag 1 is
    kept if nothing clears the band). ``ar_aic`` fits AR(p) by least squares for
    p = 1..max_lag on a common sample and returns lags 1..p of the AIC-best p.
    """
    values = np.asarray(values, dtype=float)
    max_lag = max(1, min(int(max_lag), values.size // 4))
    if method == "acf":
        acf = autocorrelation(values, max_lag)[1:]
        band = 1.96 / math.sqrt(values.size)
        ranked = [int(i) + 1 for i in np.argsort(-np.abs(acf), kind="stable") if abs(acf[i]) > band]
        if not ranked:
            ranked = [1]
        if n_lags is not None:
            ranked = ranked[:max(1, int(n_lags))]
        return tuple(sorted(ranked))
    if method == "ar_aic":
        x_all, y = make_lagged_pairs(values, range(1, max_lag + 1))
        n = y.size
        best_p, best_aic = 1, math.inf
        for p in range(1, max_lag + 1):
            design = np.column_stack([np.ones(n), x_all[:, :p]])
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            rss = float(np.sum((y - design @ coef) ** 2))
            aic = n * math.log(max(rss / n, 1e-300)) + 2 * (p + 1)
            if aic < best_aic:
                best_p, best_aic = p, aic
        return tuple(range(1, best_p + 1))
    raise ConfigError(f"unknown lag selection method {method!r}")


def global_norm(grads: Params) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def run_sgd(
    params: Params,
    loss_and_grad: LossAndGrad,
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    seed: int,
    validation_loss: Optional[Callable[[Params], float]] = None,
) -> float:
    """
    Train ``params`` in place; returns the final full-data MSE

    With ``config.patience`` > 0 and a ``validation_loss``, training stops
    once that loss has not improved for ``patience`` epochs and the best
    parameters seen are restored.

    Raises:
        NumericalError: when the loss becomes NaN or infinite ("diverged")
    """
    rng = np.random.default_rng(seed)
    velocity = {name: np.zeros_like(value) for name, value in params.items()}
    n = len(y)
    early_stopping = config.patience > 0 and validation_loss is not None
    best_loss, best_params, stale = math.inf, None, 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads = loss_and_grad(params, x[batch], y[batch])
            if not math.isfinite(loss):
                raise NumericalError(f"diverged at epoch {epoch}: loss is {loss}")
            if config.clip_norm is not None:
                norm = global_norm(grads)
                if norm > config.clip_norm:
                    grads = {name: g * (config.clip_norm / norm) for name, g in grads.items()}
            for name, g in grads.items():
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * g
                params[name] += velocity[name]
        if early_stopping:
            current = validation_loss(params)
            if current < best_loss:
                best_loss, best_params, stale = current, {k: v.copy() for k, v in params.items()}, 0
            else:
                stale += 1
                if stale >= config.patience:
                    logger.debug(f"early stop at epoch {epoch}, best validation loss {best_loss:.6g}")
                    break
    if best_params is not None:
        for name, value in best_params.items():
            params[name][...] = value
    final_loss, _ = loss_and_grad(params, x, y)
    if not math.isfinite(final_loss):
        raise NumericalError(f"diverged after {config.epochs} epochs: loss is {final_loss}")
    return float(final_loss)


def choose_hidden_size(scores: Dict[int, float], tolerance: float = 1e-3) -> int:
    """Smallest size whose validation RMSE is within ``tolerance`` (relative) of the best"""
    if not scores:
        raise ConfigError("empty candidate set for hidden size")
    best = min(scores.values())
    limit = best * (1.0 + tolerance) + 1e-15
    return min(q for q, score in scores.items() if score <= limit)


def search_hidden_size(
    candidates: Iterable[int],
    fit_candidate: Callable[[int, int], object],
    score_candidate: Callable[[object], float],
    seed: int,
    config: TrainConfig,
    label: str,
) -> Tuple[int, float, Dict[int, float]]:
    """
    Fit one model per candidate size and pick by validation RMSE

    Each candidate gets a seed split from ``seed`` so results do not depend
    on evaluation order or on ``n_jobs``.
    """
    candidates = sorted({int(q) for q in candidates})
    if not candidates:
        raise ConfigError("empty candidate set for hidden size")

    def evaluate(q: int) -> float:
        return score_candidate(fit_candidate(q, derive_seed(seed, label, q)))

    if config.n_jobs != 1 and len(candidates) > 1:
        results = Parallel(n_jobs=config.n_jobs)(delayed(evaluate)(q) for q in candidates)
    else:
        results = [evaluate(q) for q in candidates]
    scores = dict(zip(candidates, results))
    chosen = choose_hidden_size(scores, config.tie_tolerance)
    logger.info(f"{label}: hidden size {chosen} (validation RMSE {scores[chosen]:.6g}) from {candidates}")
    return chosen, scores[chosen], scores


def format_float(value: float) -> str:
    """17 significant digits: parses back to the same double"""
    return format(float(value), ".17g")


def write_weights(path, meta: Dict[str, str], blocks: Dict[str, np.ndarray], header: Optional[str] = None) -> None:
    """
    Flat-text weights: ``key value`` metadata lines, then named blocks

    A block starts with ``[name] d1 d2 ...`` and holds its values row-major,
    one matrix row per line.
    """
    lines = []
    if header:
        lines.append(f"# {header}")
    for key, value in meta.items():
        lines.append(f"{key} {value}")
    for name, array in blocks.items():
        array = np.asarray(array, dtype=float)
        lines.append(f"[{name}] " + " ".join(str(d) for d in array.shape))
        rows = array.reshape(-1, array.shape[-1]) if array.ndim > 1 else array.reshape(1, -1)
        for row in rows:
            lines.append(" ".join(format_float(v) for v in row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_weights(path) -> Tuple[Dict[str, str], Dict[str, np.ndarray]]:
    meta: Dict[str, str] = {}
    blocks: Dict[str, np.ndarray] = {}
    with open(path) as f:
        lines = [line.rstrip("\n") for line in f if line.strip() and not line.startswith("#")]
    i = 0
    try:
        while i < len(lines):
            line = lines[i]
            if line.startswith("["):
                name, _, dims = line[1:].partition("]")
                shape = tuple(int(d) for d in dims.split())
                n_rows = int(np.prod(shape[:-1])) if len(shape) > 1 else 1
                values = []
                for row in lines[i + 1:i + 1 + n_rows]:
                    values.extend(float(v) for v in row.split())
                blocks[name] = np.array(values, dtype=float).reshape(shape)
                i += 1 + n_rows
            else:
                key, _, value = line.partition(" ")
                meta[key] = value
                i += 1
    except ValueError as e:
        raise DataError(f"malformed weight file {path}: {e}")
    return meta, blocks


def train_config_meta(config: TrainConfig) -> Dict[str, str]:
    return {
        "learning_rate": format_float(config.learning_rate),
        "epochs": str(config.epochs),
        "batch_size": str(config.batch_size),
        "momentum": format_float(config.momentum),
        "clip_norm": "none" if config.clip_norm is None else format_float(config.clip_norm),
        "validation_fraction": format_float(config.validation_fraction),
        "tie_tolerance": format_float(config.tie_tolerance),
        "patience": str(config.patience),
    }


def train_config_from_meta(meta: Dict[str, str]) -> TrainConfig:
    clip = meta.get("clip_norm", "none")
    return TrainConfig(
        learning_rate=float(meta["learning_rate"]),
        epochs=int(meta["epochs"]),
        batch_size=int(meta["batch_size"]),
        momentum=float(meta["momentum"]),
        clip_norm=None if clip == "none" else float(clip),
        validation_fraction=float(meta["validation_fraction"]),
        tie_tolerance=float(meta["tie_tolerance"]),
        patience=int(meta.get("patience", "0")),
    )
