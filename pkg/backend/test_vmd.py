"""
Tests for variational mode decomposition
"""

import numpy as np
import pytest

from errors import ConfigError, DataError
from vmd import ModeSet, VmdConfig, mode_bandwidth, reconstruct, scan_mode_count, vmd_decompose

T = np.arange(1000)
LOW_TONE = np.cos(2 * np.pi * 0.03 * T)
HIGH_TONE = np.cos(2 * np.pi * 0.20 * T)
TWO_TONE = LOW_TONE + HIGH_TONE


@pytest.fixture(scope="module")
def two_tone_modes():
    return vmd_decompose(TWO_TONE, VmdConfig(k=2))


def test_single_tone_frequency():
    modeset = vmd_decompose(np.cos(2 * np.pi * 0.05 * T), VmdConfig(k=1))
    assert modeset.center_freqs[0] == pytest.approx(0.05, abs=1e-3)


def test_two_tone_separation(two_tone_modes):
    np.testing.assert_allclose(two_tone_modes.center_freqs, [0.03, 0.20], rtol=0.02)
    assert np.corrcoef(two_tone_modes.modes[0], LOW_TONE)[0, 1] > 0.99
    assert np.corrcoef(two_tone_modes.modes[1], HIGH_TONE)[0, 1] > 0.99


def test_two_tone_converges_with_small_residual(two_tone_modes):
    assert two_tone_modes.converged
    assert two_tone_modes.iterations_used <= 500
    rms = lambda x: np.sqrt(np.mean(x ** 2))
    assert rms(two_tone_modes.residual) < 0.01 * rms(TWO_TONE)


def test_mode_energy_does_not_exceed_signal(two_tone_modes):
    energy = sum(float(mode @ mode) for mode in two_tone_modes.modes)
    assert energy <= 1.05 * float(TWO_TONE @ TWO_TONE)


def test_constant_signal_with_pinned_dc():
    modeset = vmd_decompose(np.full(200, 5.0), VmdConfig(k=1, pin_dc=True))
    assert modeset.center_freqs[0] == 0.0
    np.testing.assert_allclose(modeset.modes[0], 5.0, atol=1e-8)


def test_reconstruct_gives_input_back():
    signal = np.random.default_rng(2).normal(size=300) + np.sin(np.arange(300) / 3.0)
    modeset = vmd_decompose(signal, VmdConfig(k=3, max_iter=50))
    np.testing.assert_allclose(reconstruct(modeset), signal, rtol=0, atol=1e-10)


def test_reconstruct_with_partitioning_modes():
    signal = np.arange(12, dtype=float)
    modes = np.stack([signal * 0.25, signal * 0.75])
    modeset = ModeSet(modes=modes, center_freqs=np.array([0.0, 0.1]), residual=np.zeros(12))
    np.testing.assert_array_equal(reconstruct(modeset), signal)


def test_frequencies_sorted_and_below_nyquist():
    signal = np.random.default_rng(4).normal(size=400)
    modeset = vmd_decompose(signal, VmdConfig(k=4, init_omega="random", seed=9, max_iter=100))
    assert np.all(np.diff(modeset.center_freqs) >= 0)
    assert np.all((modeset.center_freqs >= 0) & (modeset.center_freqs < 0.5))
    assert modeset.k == 4
    assert len(modeset) == 400


def test_seeded_random_init_is_deterministic():
    config = VmdConfig(k=3, init_omega="random", seed=5, max_iter=80)
    first = vmd_decompose(TWO_TONE, config)
    second = vmd_decompose(TWO_TONE, config)
    np.testing.assert_array_equal(first.modes, second.modes)
    np.testing.assert_array_equal(first.center_freqs, second.center_freqs)


def test_non_convergence_is_reported():
    modeset = vmd_decompose(TWO_TONE, VmdConfig(k=2, max_iter=2))
    assert not modeset.converged
    assert modeset.iterations_used == 2


def test_too_short_and_non_finite_input():
    with pytest.raises(DataError, match="too short"):
        vmd_decompose(np.ones(11), VmdConfig(k=3))
    with pytest.raises(DataError):
        vmd_decompose(np.r_[np.ones(20), np.inf], VmdConfig(k=1))


def test_invalid_config():
    with pytest.raises(ConfigError):
        VmdConfig(k=0)
    with pytest.raises(ConfigError):
        VmdConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        VmdConfig(init_omega="spread")


class TestModeBandwidth:
    def test_tone_demodulated_at_its_frequency(self):
        tone = np.cos(2 * np.pi * 0.05 * T)
        assert mode_bandwidth(tone, 0.05) < 1e-6 * float(tone @ tone)

    def test_grows_with_offset(self):
        tone = np.cos(2 * np.pi * 0.05 * T)
        widths = [mode_bandwidth(tone, 0.05 + offset) for offset in (0.01, 0.03, 0.07)]
        assert widths[0] < widths[1] < widths[2]
        assert widths[1] / widths[0] == pytest.approx(9.0, rel=1e-6)

    @pytest.mark.slow
    def test_white_noise_matches_flat_spectrum(self):
        # unit-variance noise: doubled bins carry 4N power each
        n, omega = 4096, 0.25
        expected = 4 * n * (2 * np.pi) ** 2 * ((0.5 - omega) ** 3 + omega ** 3) / 3
        rng = np.random.default_rng(8)
        widths = [mode_bandwidth(rng.standard_normal(n), omega) for _ in range(20)]
        assert np.mean(widths) == pytest.approx(expected, rel=0.1)

    def test_empty_mode(self):
        with pytest.raises(DataError):
            mode_bandwidth([], 0.1)


def test_scan_mode_count_reports_gaps():
    scans = scan_mode_count(TWO_TONE, [1, 2], VmdConfig(max_iter=200))
    assert set(scans) == {1, 2}
    assert np.isnan(scans[1].min_gap)
    assert scans[2].min_gap == pytest.approx(0.17, abs=0.01)
