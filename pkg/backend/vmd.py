"""
Variational mode decomposition

Splits a real series into k band-limited modes, each compact around a center
frequency, by ADMM on the positive half-spectrum: Wiener-filter mode updates,
power-weighted centroid frequency updates and (optional) multiplier ascent.
Frequencies are normalized, in cycles per sample.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from errors import ConfigError, DataError

logger = logging.getLogger(__name__)

INIT_CHOICES = ("uniform", "zero", "random")
_DENOMINATOR_FLOOR = 1e-14
_BELOW_NYQUIST = np.nextafter(0.5, 0.0)


@dataclass(frozen=True)
class VmdConfig:
    k: int = 3
    alpha: float = 2000.0
    tau: float = 0.0
    tol: float = 1e-7
    max_iter: int = 500
    init_omega: str = "uniform"
    seed: int = 0
    pin_dc: bool = False
    mirror_extend: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.tau < 0:
            raise ConfigError(f"tau must be nonnegative, got {self.tau}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.init_omega not in INIT_CHOICES:
            raise ConfigError(f"init_omega must be one of {INIT_CHOICES}, got {self.init_omega!r}")


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Modes in time domain sorted by ascending center frequency"""
    modes: np.ndarray
    center_freqs: np.ndarray
    residual: np.ndarray
    iterations_used: int = 0
    converged: bool = False

    @property
    def k(self) -> int:
        return int(self.modes.shape[0])

    def __len__(self) -> int:
        return int(self.residual.size)


@dataclass
class VmdSolverState:
    """Half-spectrum ADMM iterate"""
    mode_spectra: np.ndarray
    multiplier: np.ndarray
    omega: np.ndarray
    iteration: int = 0
    converged: bool = False
    history: list = field(default_factory=list)


def _mirror(signal: np.ndarray):
    half = signal.size // 2
    extended = np.concatenate([signal[:half][::-1], signal, signal[half:][::-1]])
    return extended, half


def _initial_omega(config: VmdConfig, extended_length: int) -> np.ndarray:
    k = config.k
    if config.init_omega == "uniform":
        omega = (np.arange(k) + 0.5) / (2.0 * k)
    elif config.init_omega == "zero":
        omega = np.zeros(k)
    else:
        rng = np.random.default_rng(config.seed)
        fs = 1.0 / extended_length
        omega = np.sort(np.exp(np.log(fs) + (np.log(0.5) - np.log(fs)) * rng.random(k)))
    if config.pin_dc:
        omega[0] = 0.0
    return omega


def _admm(f_hat: np.ndarray, freqs: np.ndarray, config: VmdConfig, omega: np.ndarray) -> VmdSolverState:
    k = config.k
    state = VmdSolverState(
        mode_spectra=np.zeros((k, f_hat.size), dtype=complex),
        multiplier=np.zeros(f_hat.size, dtype=complex),
        omega=omega.astype(float),
    )
    u_hat = state.mode_spectra
    for n in range(1, config.max_iter + 1):
        previous = u_hat.copy()
        total = u_hat.sum(axis=0)
        for i in range(k):
            total -= u_hat[i]
            u_hat[i] = (f_hat - total + state.multiplier / 2.0) / (
                1.0 + 2.0 * config.alpha * (freqs - state.omega[i]) ** 2
            )
            total += u_hat[i]
            if config.pin_dc and i == 0:
                continue
            power = np.abs(u_hat[i]) ** 2
            mass = power.sum()
            if mass > 0:
                state.omega[i] = min(float(freqs @ power / mass), _BELOW_NYQUIST)
        if config.tau > 0:
            state.multiplier = state.multiplier + config.tau * (f_hat - total)

        change = np.sum(np.abs(u_hat - previous) ** 2, axis=1)
        scale = np.maximum(np.sum(np.abs(previous) ** 2, axis=1), _DENOMINATOR_FLOOR)
        delta = float(np.sum(change / scale))
        state.iteration = n
        state.history.append(delta)
        if delta < config.tol:
            state.converged = True
            break
    return state


def vmd_decompose(signal: Sequence[float], config: Optional[VmdConfig] = None) -> ModeSet:
    """
    Decompose ``signal`` into ``config.k`` modes

    The residual is defined as the input minus the mode sum, so modes plus
    residual give back the input.

    Raises:
        DataError: if the signal is shorter than 4k or not finite
    """
    config = config or VmdConfig()
    f = np.asarray(signal, dtype=float)
    if f.ndim != 1:
        raise DataError("VMD input must be one-dimensional")
    if f.size < 4 * config.k:
        raise DataError(f"signal too short for VMD: {f.size} samples, need at least {4 * config.k}")
    if not np.all(np.isfinite(f)):
        raise DataError("VMD input contains NaN or infinite values")

    if config.mirror_extend:
        extended, offset = _mirror(f)
    else:
        extended, offset = f, 0
    f_hat = np.fft.rfft(extended)
    freqs = np.fft.rfftfreq(extended.size)

    state = _admm(f_hat, freqs, config, _initial_omega(config, extended.size))
    if not state.converged:
        logger.warning(
            f"VMD did not converge in {config.max_iter} iterations "
            f"(last relative change {state.history[-1]:.3e}, tol {config.tol:g})"
        )
    else:
        logger.debug(f"VMD converged after {state.iteration} iterations")

    modes_ext = np.fft.irfft(state.mode_spectra, n=extended.size, axis=1)
    modes = modes_ext[:, offset:offset + f.size]
    order = np.argsort(state.omega, kind="stable")
    modes = np.ascontiguousarray(modes[order])
    omega = state.omega[order]

    return ModeSet(
        modes=modes,
        center_freqs=omega,
        residual=f - _mode_sum(modes),
        iterations_used=state.iteration,
        converged=state.converged,
    )


def _mode_sum(modes: np.ndarray) -> np.ndarray:
    # fixed order: mode 0, 1, ... so reconstruct repeats the same rounding
    total = np.zeros(modes.shape[1])
    for mode in modes:
        total = total + mode
    return total


def reconstruct(modeset: ModeSet) -> np.ndarray:
    """Mode sum plus residual"""
    return _mode_sum(modeset.modes) + modeset.residual


def mode_bandwidth(mode: Sequence[float], omega: float) -> float:
    """
    Squared L2 norm of the time derivative of the demodulated analytic signal

    The analytic signal keeps the non-negative half-spectrum with interior
    bins doubled; demodulating by ``omega`` and differentiating multiplies
    each bin by j*2*pi*(f - omega). Evaluated through Parseval.
    """
    x = np.asarray(mode, dtype=float)
    if x.size == 0:
        raise DataError("mode_bandwidth needs a non-empty mode")
    n = x.size
    spectrum = np.fft.fft(x)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[1:n // 2] = 2.0
        weights[n // 2] = 1.0
    else:
        weights[1:(n + 1) // 2] = 2.0
    analytic = spectrum * weights
    freqs = np.fft.fftfreq(n)
    return float(np.sum((2.0 * np.pi * (freqs - omega)) ** 2 * np.abs(analytic) ** 2) / n)


@dataclass(frozen=True)
class ModeCountScan:
    k: int
    center_freqs: np.ndarray
    min_gap: float
    converged: bool


def scan_mode_count(signal: Sequence[float], ks: Iterable[int], config: Optional[VmdConfig] = None) -> Dict[int, ModeCountScan]:
    """
    Center frequencies for several mode counts

    A collapsing minimum gap between adjacent center frequencies suggests k
    is too large. Diagnostic only; the mode count is never chosen from it.
    """
    config = config or VmdConfig()
    scans = {}
    for k in ks:
        cfg = VmdConfig(**{**config.__dict__, "k": int(k)})
        modeset = vmd_decompose(signal, cfg)
        gaps = np.diff(modeset.center_freqs)
        scans[int(k)] = ModeCountScan(
            k=int(k),
            center_freqs=modeset.center_freqs,
            min_gap=float(gaps.min()) if gaps.size else float("nan"),
            converged=modeset.converged,
        )
        logger.info(f"k={k}: center frequencies {np.round(modeset.center_freqs, 5).tolist()}")
    return scans
