"""
Seasonal ARIMA for the periodic component

phi(B) Phi(B^S) (Y_t - mu) = theta(B) Theta(B^S) e_t,  Y_t = (1-B)^d (1-B^S)^D X_t

Polynomial conventions: phi(z) = 1 - sum phi_i z^i, theta(z) = 1 + sum theta_i z^i,
likewise for the seasonal factors. The intercept mu is estimated only when
d + D = 0. Coefficients are fit by conditional sum of squares over
PACF-transformed parameters, which keeps every candidate stationary and
invertible.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize
from scipy.signal import lfilter

from errors import ConfigError, DataError, NumericalError
from timeseries import SeriesLike, as_array, autocorrelation
from training import format_float, read_weights, write_weights

logger = logging.getLogger(__name__)

IC_CHOICES = ("aicc", "aic", "bic")
SEARCH_CHOICES = ("stepwise", "grid")
KPSS_CRITICAL = {0.1: 0.347, 0.05: 0.463, 0.025: 0.574, 0.01: 0.739}

ROOT_MARGIN = 1e-6
_MAX_PACF_ARG = 7.0
_VARIANCE_FLOOR = 1e-300


@dataclass(frozen=True)
class SarimaOrder:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    S: int = 1

    def __post_init__(self):
        for name in ("p", "d", "q", "P", "D", "Q"):
            if getattr(self, name) < 0:
                raise ConfigError(f"SARIMA order {name} must be nonnegative, got {getattr(self, name)}")
        if self.S < 1:
            raise ConfigError(f"seasonal period must be at least 1, got {self.S}")
        if self.p > 5 or self.q > 5:
            raise ConfigError(f"p and q are limited to 5, got p={self.p} q={self.q}")
        if self.P > 2 or self.Q > 2:
            raise ConfigError(f"P and Q are limited to 2, got P={self.P} Q={self.Q}")
        if self.d + self.D > 3:
            raise ConfigError(f"d + D is limited to 3, got {self.d + self.D}")

    @property
    def n_arma(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def has_intercept(self) -> bool:
        return self.d + self.D == 0

    @property
    def ar_span(self) -> int:
        return self.p + self.S * self.P

    @property
    def ma_span(self) -> int:
        return self.q + self.S * self.Q

    @property
    def diff_span(self) -> int:
        return self.d + self.S * self.D

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})({self.P},{self.D},{self.Q})[{self.S}]"


def _lag_polynomial(coeffs: Sequence[float], lag: int, sign: float) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    poly = np.zeros(coeffs.size * lag + 1)
    poly[0] = 1.0
    poly[lag::lag] = sign * coeffs
    return poly


def ar_polynomial(phi: Sequence[float], Phi: Sequence[float], S: int) -> np.ndarray:
    """Coefficients of phi(B) Phi(B^S), ascending powers of B"""
    return np.convolve(_lag_polynomial(phi, 1, -1.0), _lag_polynomial(Phi, S, -1.0))


def ma_polynomial(theta: Sequence[float], Theta: Sequence[float], S: int) -> np.ndarray:
    return np.convolve(_lag_polynomial(theta, 1, 1.0), _lag_polynomial(Theta, S, 1.0))


def differencing_polynomial(d: int, D: int, S: int) -> np.ndarray:
    poly = np.ones(1)
    for _ in range(D):
        poly = np.convolve(poly, _lag_polynomial([1.0], S, -1.0))
    for _ in range(d):
        poly = np.convolve(poly, [1.0, -1.0])
    return poly


def min_root_modulus(poly: Sequence[float]) -> float:
    """Smallest |z| with poly(z) = 0; infinite for a constant polynomial"""
    poly = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if poly.size <= 1:
        return math.inf
    return float(np.min(np.abs(np.polynomial.polynomial.polyroots(poly))))


def _difference_lags(d: int, D: int, S: int) -> List[int]:
    return [S] * D + [1] * d


def difference(series: SeriesLike, d: int, D: int, S: int) -> np.ndarray:
    """Seasonal differencing D times, then ordinary differencing d times"""
    x = np.asarray(as_array(series), dtype=float)
    if x.size <= d + S * D:
        raise DataError(f"series of length {x.size} is too short to difference with d={d}, D={D}, S={S}")
    for lag in _difference_lags(d, D, S):
        x = x[lag:] - x[:-lag]
    return x


def integrate(differenced: Sequence[float], initial: Sequence[float], d: int, D: int, S: int) -> np.ndarray:
    """
    Invert ``difference`` given the first d + S*D values of the original series

    Raises:
        DataError: if the number of initial values does not match
    """
    lags = _difference_lags(d, D, S)
    initial = np.asarray(initial, dtype=float)
    if initial.size != sum(lags):
        raise DataError(f"integration needs {sum(lags)} initial values, got {initial.size}")
    heads = []
    level = initial
    for lag in lags:
        heads.append(level[:lag].copy())
        level = level[lag:] - level[:-lag]
    out = np.asarray(differenced, dtype=float)
    for lag, head in zip(reversed(lags), reversed(heads)):
        undone = np.empty(out.size + lag)
        undone[:lag] = head
        for r in range(lag):
            undone[r + lag::lag] = head[r] + np.cumsum(out[r::lag])
        out = undone
    return out


@dataclass(frozen=True, eq=False)
class SarimaModel:
    """
    Fitted (or hand-built) seasonal ARIMA model

    ``last_observations`` keeps the final p + d + S*(P+D) undifferenced values
    and ``last_residuals`` the final q + S*Q innovations; together they are
    the state the forecast recursion starts from.
    """
    order: SarimaOrder
    phi: np.ndarray = ()
    theta: np.ndarray = ()
    Phi: np.ndarray = ()
    Theta: np.ndarray = ()
    sigma2: float = 1.0
    intercept: float = 0.0
    loglik: float = math.nan
    aicc: float = math.nan
    n_used: int = 0
    last_observations: np.ndarray = ()
    last_residuals: np.ndarray = ()

    def __post_init__(self):
        order = self.order
        for name, size in (("phi", order.p), ("theta", order.q), ("Phi", order.P), ("Theta", order.Q)):
            coeffs = np.array(getattr(self, name), dtype=float).reshape(-1)
            if coeffs.size != size:
                raise DataError(f"{name} needs {size} coefficients for SARIMA{order}, got {coeffs.size}")
            object.__setattr__(self, name, coeffs)
        if not self.sigma2 > 0:
            raise DataError(f"innovation variance must be positive, got {self.sigma2}")
        for name, poly in (("phi", _lag_polynomial(self.phi, 1, -1.0)), ("Phi", _lag_polynomial(self.Phi, 1, -1.0))):
            if min_root_modulus(poly) <= 1.0:
                raise DataError(f"non-stationary {name} coefficients for SARIMA{order}")
        for name, poly in (("theta", _lag_polynomial(self.theta, 1, 1.0)), ("Theta", _lag_polynomial(self.Theta, 1, 1.0))):
            if min_root_modulus(poly) <= 1.0:
                raise DataError(f"non-invertible {name} coefficients for SARIMA{order}")

        n_obs = order.ar_span + order.diff_span
        n_res = order.ma_span
        obs = np.array(self.last_observations, dtype=float).reshape(-1)
        res = np.array(self.last_residuals, dtype=float).reshape(-1)
        if obs.size < n_obs:
            raise DataError(f"SARIMA{order} needs {n_obs} stored observations, got {obs.size}")
        if res.size < n_res:
            raise DataError(f"SARIMA{order} needs {n_res} stored residuals, got {res.size}")
        object.__setattr__(self, "last_observations", obs[obs.size - n_obs:])
        object.__setattr__(self, "last_residuals", res[res.size - n_res:])

    @property
    def n_params(self) -> int:
        """Estimated parameters including sigma2"""
        return self.order.n_arma + int(self.order.has_intercept) + 1

    def roots_ok(self, margin: float = ROOT_MARGIN) -> bool:
        """Stationarity and invertibility with a safety margin"""
        polys = (
            _lag_polynomial(self.phi, 1, -1.0), _lag_polynomial(self.Phi, 1, -1.0),
            _lag_polynomial(self.theta, 1, 1.0), _lag_polynomial(self.Theta, 1, 1.0),
        )
        return all(min_root_modulus(poly) > 1.0 + margin for poly in polys)

    @property
    def ar_poly(self) -> np.ndarray:
        return ar_polynomial(self.phi, self.Phi, self.order.S)

    @property
    def ma_poly(self) -> np.ndarray:
        return ma_polynomial(self.theta, self.Theta, self.order.S)


def _pacf_to_coeffs(x: np.ndarray) -> np.ndarray:
    """Durbin-Levinson map from unconstrained values to stationary AR coefficients"""
    partials = np.tanh(np.clip(x, -_MAX_PACF_ARG, _MAX_PACF_ARG))
    coeffs = np.zeros(0)
    for r in partials:
        coeffs = np.append(coeffs - r * coeffs[::-1], r)
    return coeffs


def _unpack(x: np.ndarray, order: SarimaOrder, mean: float, scale: float):
    p, q, P, Q = order.p, order.q, order.P, order.Q
    phi = _pacf_to_coeffs(x[:p])
    theta = -_pacf_to_coeffs(x[p:p + q])
    Phi = _pacf_to_coeffs(x[p + q:p + q + P])
    Theta = -_pacf_to_coeffs(x[p + q + P:p + q + P + Q])
    mu = mean + scale * float(x[order.n_arma]) if order.has_intercept else 0.0
    return phi, theta, Phi, Theta, mu


def _residuals(y: np.ndarray, ar: np.ndarray, ma: np.ndarray, mu: float) -> np.ndarray:
    """Innovations conditioned on e_t = 0 before the AR span is available"""
    start = ar.size - 1
    e = np.zeros(y.size)
    if y.size > start:
        w = np.convolve(y - mu, ar, mode="valid")
        e[start:] = lfilter([1.0], ma, w)
    return e


def _nelder_mead(objective, dim: int, seed: int, label: str) -> np.ndarray:
    options = {"maxiter": 1000 * dim, "maxfev": 2000 * dim, "xatol": 1e-6, "fatol": 1e-10, "adaptive": dim > 3}
    first = minimize(objective, np.zeros(dim), method="Nelder-Mead", options=options)
    if first.success and np.isfinite(first.fun):
        return first.x
    logger.warning(f"SARIMA{label}: optimizer stopped without converging ({first.message}); restarting")
    rng = np.random.default_rng(seed)
    start = first.x if np.all(np.isfinite(first.x)) else np.zeros(dim)
    second = minimize(objective, start + rng.normal(0.0, 0.5, dim), method="Nelder-Mead", options=options)
    if second.success and np.isfinite(second.fun):
        return second.x
    raise NumericalError(
        f"SARIMA{label}: optimizer did not converge after restart "
        f"({second.message}; {second.nit} iterations, objective {second.fun:.6g})"
    )


def _aicc(loglik: float, k: int, n: int) -> float:
    if n - k - 1 <= 0:
        return math.inf
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


def fit_sarima(series: SeriesLike, order: SarimaOrder, seed: int = 0, css_start: Optional[int] = None) -> SarimaModel:
    """
    Conditional-sum-of-squares fit of ``order`` to a raw series

    Innovations are summed from ``css_start`` (default: the AR span) of the
    differenced series, so models compared on one series can share a common
    conditioning sample.

    Raises:
        DataError: if the differenced series is too short for the order
        NumericalError: if the optimizer fails twice
    """
    x = np.asarray(as_array(series), dtype=float)
    y = difference(x, order.d, order.D, order.S)
    start = order.ar_span if css_start is None else max(int(css_start), order.ar_span)
    n_used = y.size - start
    needed = 10 * (order.n_arma + 1)
    if n_used < needed:
        raise DataError(f"SARIMA{order} needs {needed} usable differenced points, got {max(n_used, 0)}")

    S = order.S
    mean = float(y.mean())
    scale = float(y.std()) or 1.0

    def css(params):
        phi, theta, Phi, Theta, mu = _unpack(params, order, mean, scale)
        e = _residuals(y, ar_polynomial(phi, Phi, S), ma_polynomial(theta, Theta, S), mu)
        return float(e[start:] @ e[start:]), e

    def objective(params):
        value, _ = css(params)
        return 0.5 * math.log(max(value / n_used, _VARIANCE_FLOOR))

    n_coef = order.n_arma + int(order.has_intercept)
    best = _nelder_mead(objective, n_coef, seed, str(order)) if n_coef else np.zeros(0)
    phi, theta, Phi, Theta, mu = _unpack(best, order, mean, scale)
    total, e = css(best)
    sigma2 = max(total / n_used, _VARIANCE_FLOOR)
    loglik = -0.5 * n_used * (math.log(2.0 * math.pi * sigma2) + 1.0)

    model = SarimaModel(
        order=order,
        phi=phi, theta=theta, Phi=Phi, Theta=Theta,
        sigma2=sigma2,
        intercept=mu,
        loglik=loglik,
        aicc=_aicc(loglik, n_coef + 1, n_used),
        n_used=n_used,
        last_observations=x,
        last_residuals=e,
    )
    logger.debug(f"SARIMA{order}: sigma2 {sigma2:.6g}, AICc {model.aicc:.3f}")
    return model


def information_criterion(model: SarimaModel, ic: str = "aicc") -> float:
    k, n = model.n_params, model.n_used
    if ic == "aicc":
        return model.aicc
    if ic == "aic":
        return -2.0 * model.loglik + 2.0 * k
    if ic == "bic":
        return -2.0 * model.loglik + k * math.log(n)
    raise ConfigError(f"unknown information criterion {ic!r}; choose from {IC_CHOICES}")


@dataclass(frozen=True)
class SarimaConfig:
    """Order search settings; ``period`` 0 means one day of points"""
    period: int = 0
    search: str = "stepwise"
    ic: str = "aicc"
    max_p: int = 5
    max_q: int = 5
    max_P: int = 2
    max_Q: int = 2
    max_d: int = 2
    max_D: int = 1
    kpss_level: float = 0.01
    seasonal_acf_threshold: float = 0.9
    min_improvement: float = 6.0
    cancel_tolerance: float = 0.1
    max_models: int = 94
    n_jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.search not in SEARCH_CHOICES:
            raise ConfigError(f"search must be one of {SEARCH_CHOICES}, got {self.search!r}")
        if self.ic not in IC_CHOICES:
            raise ConfigError(f"ic must be one of {IC_CHOICES}, got {self.ic!r}")
        if self.kpss_level not in KPSS_CRITICAL:
            raise ConfigError(f"kpss_level must be one of {sorted(KPSS_CRITICAL)}, got {self.kpss_level}")
        if not (0 <= self.max_p <= 5 and 0 <= self.max_q <= 5 and 0 <= self.max_P <= 2 and 0 <= self.max_Q <= 2):
            raise ConfigError("search bounds must satisfy p, q <= 5 and P, Q <= 2")
        if not (0 <= self.max_d <= 2 and 0 <= self.max_D <= 1):
            raise ConfigError("max_d must lie in 0..2 and max_D in 0..1")
        if self.min_improvement < 0 or self.cancel_tolerance < 0:
            raise ConfigError("min_improvement and cancel_tolerance must be nonnegative")


def kpss_statistic(series: SeriesLike) -> float:
    """Level-stationarity KPSS statistic with a Bartlett long-run variance"""
    x = np.asarray(as_array(series), dtype=float)
    n = x.size
    e = x - x.mean()
    lags = int(4.0 * (n / 100.0) ** 0.25)
    long_run = float(e @ e) / n
    for s in range(1, min(lags, n - 1) + 1):
        long_run += 2.0 * (1.0 - s / (lags + 1.0)) * float(e[s:] @ e[:-s]) / n
    if long_run <= 0:
        return 0.0
    partial = np.cumsum(e)
    return float(partial @ partial) / (n * n * long_run)


def choose_differencing(series: SeriesLike, S: int, config: Optional[SarimaConfig] = None) -> Tuple[int, int]:
    """Seasonal order D from the lag-S autocorrelation, then d from repeated KPSS tests"""
    config = config or SarimaConfig()
    x = np.asarray(as_array(series), dtype=float)
    D = 0
    if S > 1 and config.max_D > 0 and x.size > 2 * S and np.ptp(x) > 0:
        if autocorrelation(x, S)[S] > config.seasonal_acf_threshold:
            D = 1
    y = difference(x, 0, D, S) if D else x
    critical = KPSS_CRITICAL[config.kpss_level]
    d = 0
    while d < config.max_d and y.size > 10 and np.ptp(y) > 0 and kpss_statistic(y) > critical:
        y = np.diff(y)
        d += 1
    return d, D


def has_common_factor(model: SarimaModel, tolerance: float = 0.1) -> bool:
    """
    True when an AR factor and an MA factor of the same kind nearly cancel

    Compares inverse roots of phi with theta and of Phi with Theta; a pair
    closer than ``tolerance`` leaves the model equivalent to a smaller one.
    """
    for ar, ma in ((model.phi, model.theta), (model.Phi, model.Theta)):
        if ar.size and ma.size:
            ar_roots = np.roots(np.r_[1.0, -ar])
            ma_roots = np.roots(np.r_[1.0, ma])
            if np.min(np.abs(ar_roots[:, None] - ma_roots[None, :])) < tolerance:
                return True
    return False


def _try_fit(x: np.ndarray, order: SarimaOrder, seed: int, css_start: int) -> Optional[SarimaModel]:
    try:
        return fit_sarima(x, order, seed, css_start)
    except (DataError, NumericalError) as e:
        logger.debug(f"SARIMA{order} skipped: {e}")
        return None


def _search(x: np.ndarray, S: int, config: SarimaConfig) -> Tuple[SarimaModel, Dict[SarimaOrder, float]]:
    seasonal = S > 1
    max_P = config.max_P if seasonal else 0
    max_Q = config.max_Q if seasonal else 0
    d, D = choose_differencing(x, S, config)
    if not seasonal:
        D = 0
    css_start = config.max_p + S * max_P
    cache: Dict[SarimaOrder, Optional[SarimaModel]] = {}

    def make(p, q, P, Q) -> SarimaOrder:
        return SarimaOrder(min(p, config.max_p), d, min(q, config.max_q), min(P, max_P), D, min(Q, max_Q), S)

    def evaluate(orders: List[SarimaOrder]) -> None:
        todo = [o for o in dict.fromkeys(orders) if o not in cache]
        todo = todo[:max(config.max_models - len(cache), 0)]
        if config.n_jobs != 1 and len(todo) > 1:
            fitted = Parallel(n_jobs=config.n_jobs)(delayed(_try_fit)(x, o, config.seed, css_start) for o in todo)
        else:
            fitted = [_try_fit(x, o, config.seed, css_start) for o in todo]
        cache.update(zip(todo, fitted))

    def score(order: SarimaOrder) -> float:
        model = cache.get(order)
        if model is None:
            return math.inf
        if order.n_arma and has_common_factor(model, config.cancel_tolerance):
            logger.debug(f"SARIMA{order} dropped: AR and MA factors nearly cancel")
            return math.inf
        return information_criterion(model, config.ic)

    def rank(order: SarimaOrder) -> float:
        # each extra coefficient has to buy min_improvement on top of the criterion's own penalty
        return score(order) + config.min_improvement * order.n_arma

    if config.search == "grid":
        candidates = [
            make(p, q, P, Q)
            for p, q, P, Q in itertools.product(
                range(config.max_p + 1), range(config.max_q + 1), range(max_P + 1), range(max_Q + 1))
        ]
        evaluate(candidates)
        best = min(candidates, key=rank)
    else:
        starts = [make(0, 0, 0, 0), make(2, 2, 1, 1), make(1, 0, 1, 0), make(0, 1, 0, 1)]
        evaluate(starts)
        best = min(starts, key=rank)
        while len(cache) < config.max_models:
            moves = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1), (1, 1, 0, 0), (0, 0, 1, 1)]
            neighbors = []
            for move in moves:
                for sign in (-1, 1):
                    p, q, P, Q = (v + sign * m for v, m in zip((best.p, best.q, best.P, best.Q), move))
                    if 0 <= p <= config.max_p and 0 <= q <= config.max_q and 0 <= P <= max_P and 0 <= Q <= max_Q:
                        neighbors.append(make(p, q, P, Q))
            if not neighbors:
                break
            evaluate(neighbors)
            challenger = min(neighbors, key=rank)
            if rank(challenger) < rank(best):
                best = challenger
            else:
                break

    scores = {order: score(order) for order in cache}
    if not math.isfinite(scores.get(best, math.inf)):
        raise NumericalError(f"no SARIMA order could be fitted ({len(cache)} candidates with d={d}, D={D}, S={S})")
    logger.info(f"Selected SARIMA{best} by {config.ic} {scores[best]:.3f} after {len(cache)} fits")
    return cache[best], scores


def select_order(series: SeriesLike, S: int, search: Optional[str] = None, config: Optional[SarimaConfig] = None) -> SarimaOrder:
    """
    Choose d and D, then search p, q, P, Q by information criterion

    Raises:
        NumericalError: if every candidate fails to fit
    """
    config = config or SarimaConfig()
    if search is not None:
        config = replace(config, search=search)
    model, _ = _search(np.asarray(as_array(series), dtype=float), S, config)
    return model.order


def fit_auto_sarima(series: SeriesLike, S: int, config: Optional[SarimaConfig] = None) -> SarimaModel:
    """Order selection plus the fitted model of the selected order"""
    model, _ = _search(np.asarray(as_array(series), dtype=float), S, config or SarimaConfig())
    return model


def _forecast_paths(model: SarimaModel, observations: np.ndarray, residuals: np.ndarray, h: int) -> np.ndarray:
    """Difference-equation recursion on the undifferenced scale, one row per start state"""
    order = model.order
    ar = model.ar_poly
    full_ar = np.convolve(ar, differencing_polynomial(order.d, order.D, order.S))
    ma = model.ma_poly
    constant = model.intercept * float(ar.sum())
    m, r = full_ar.size - 1, ma.size - 1
    n = observations.shape[0]
    xs = np.concatenate([observations, np.zeros((n, h))], axis=1)
    es = np.concatenate([residuals, np.zeros((n, h))], axis=1)
    ar_weights = -full_ar[1:][::-1]
    ma_weights = ma[1:][::-1]
    for s in range(h):
        value = constant + xs[:, s:m + s] @ ar_weights
        if r:
            value = value + es[:, s:r + s] @ ma_weights
        xs[:, m + s] = value
    return xs[:, m:]


def _check_horizon(model: SarimaModel, h: int) -> None:
    if h < 1:
        raise DataError(f"horizon must be at least 1, got {h}")
    if h > 10 * model.order.S:
        raise DataError(f"horizon too long: {h} steps exceeds 10 seasonal periods of {model.order.S}")


def forecast_sarima(model: SarimaModel, h: int) -> np.ndarray:
    """h-step forecasts from the stored tails, future innovations set to zero"""
    _check_horizon(model, h)
    return _forecast_paths(model, model.last_observations[None, :], model.last_residuals[None, :], h)[0]


def _history_tails(model: SarimaModel, values: np.ndarray, origins: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    order = model.order
    y = difference(values, order.d, order.D, order.S)
    e = _residuals(y, model.ar_poly, model.ma_poly, model.intercept)
    n_diff = order.diff_span
    m = order.ar_span + n_diff
    r = order.ma_span
    lowest = max(m, n_diff + r, n_diff + 1)
    if origins.min() < lowest or origins.max() > values.size:
        raise DataError(f"forecast origins must lie in [{lowest}, {values.size}] for SARIMA{order}")
    observations = np.stack([values[t - m:t] for t in origins])
    residuals = np.stack([e[t - n_diff - r:t - n_diff] for t in origins])
    return observations, residuals


def sarima_with_history(model: SarimaModel, values: SeriesLike) -> SarimaModel:
    """Same coefficients, tails recomputed from a new raw history (no refit)"""
    x = np.asarray(as_array(values), dtype=float)
    observations, residuals = _history_tails(model, x, np.array([x.size]))
    return replace(model, last_observations=observations[0], last_residuals=residuals[0])


def sarima_forecast_origins(model: SarimaModel, values: SeriesLike, origins: Sequence[int], h: int) -> np.ndarray:
    """
    Forecasts of values[t], ..., values[t+h-1] from values[:t] for each origin t

    Residuals are a causal filter of the history, so one pass over ``values``
    serves every origin.
    """
    _check_horizon(model, h)
    x = np.asarray(as_array(values), dtype=float)
    observations, residuals = _history_tails(model, x, np.asarray(origins, dtype=int))
    return _forecast_paths(model, observations, residuals, h)


def simulate_sarima(
    order: SarimaOrder,
    n: int,
    phi: Sequence[float] = (),
    theta: Sequence[float] = (),
    Phi: Sequence[float] = (),
    Theta: Sequence[float] = (),
    sigma2: float = 1.0,
    intercept: float = 0.0,
    seed: int = 0,
    burn_in: Optional[int] = None,
) -> np.ndarray:
    """Seeded Gaussian sample path; integrated from zero initial values"""
    SarimaModel(order=order, phi=phi, theta=theta, Phi=Phi, Theta=Theta, sigma2=sigma2,
                last_observations=np.zeros(order.ar_span + order.diff_span),
                last_residuals=np.zeros(order.ma_span))
    ar = ar_polynomial(phi, Phi, order.S)
    ma = ma_polynomial(theta, Theta, order.S)
    burn = burn_in if burn_in is not None else 10 * max(ar.size, ma.size, order.S) + 100
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, math.sqrt(sigma2), n + burn)
    y = lfilter(ma, ar, e) + intercept
    x = lfilter([1.0], differencing_polynomial(order.d, order.D, order.S), y)
    return x[burn:]


def _floats(values) -> str:
    return " ".join(format_float(v) for v in values)


def _parse_floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split()], dtype=float)


def save_sarima(model: SarimaModel, path, header: Optional[str] = None) -> None:
    o = model.order
    meta = {
        "kind": "sarima",
        "order": f"{o.p} {o.d} {o.q} {o.P} {o.D} {o.Q} {o.S}",
        "phi": _floats(model.phi),
        "theta": _floats(model.theta),
        "Phi": _floats(model.Phi),
        "Theta": _floats(model.Theta),
        "sigma2": format_float(model.sigma2),
        "intercept": format_float(model.intercept),
        "loglik": format_float(model.loglik),
        "aicc": format_float(model.aicc),
        "n_used": str(model.n_used),
        "last_observations": _floats(model.last_observations),
        "last_residuals": _floats(model.last_residuals),
    }
    write_weights(path, meta, {}, header)


def load_sarima(path) -> SarimaModel:
    meta, _ = read_weights(path)
    if meta.get("kind") != "sarima":
        raise DataError(f"{path} is not a SARIMA model file")
    try:
        p, d, q, P, D, Q, S = (int(v) for v in meta["order"].split())
        return SarimaModel(
            order=SarimaOrder(p, d, q, P, D, Q, S),
            phi=_parse_floats(meta.get("phi", "")),
            theta=_parse_floats(meta.get("theta", "")),
            Phi=_parse_floats(meta.get("Phi", "")),
            Theta=_parse_floats(meta.get("Theta", "")),
            sigma2=float(meta["sigma2"]),
            intercept=float(meta["intercept"]),
            loglik=float(meta["loglik"]),
            aicc=float(meta["aicc"]),
            n_used=int(meta["n_used"]),
            last_observations=_parse_floats(meta.get("last_observations", "")),
            last_residuals=_parse_floats(meta.get("last_residuals", "")),
        )
    except (KeyError, ValueError) as e:
        raise DataError(f"malformed SARIMA model file {path}: {e}")
