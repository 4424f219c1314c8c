"""
Tests for seasonal ARIMA differencing, fitting, order selection and forecasting
"""

import numpy as np
import pytest

from errors import ConfigError, DataError
from sarima import (
    SarimaConfig,
    SarimaModel,
    SarimaOrder,
    choose_differencing,
    difference,
    fit_sarima,
    forecast_sarima,
    has_common_factor,
    information_criterion,
    integrate,
    kpss_statistic,
    load_sarima,
    sarima_forecast_origins,
    sarima_with_history,
    save_sarima,
    select_order,
    simulate_sarima,
)

SMALL_BOX = SarimaConfig(max_p=2, max_q=2, max_P=1, max_Q=1)


class TestDifference:
    def test_first_difference(self):
        np.testing.assert_array_equal(difference([1, 2, 3, 4, 5], 1, 0, 1), [1, 1, 1, 1])

    def test_seasonal_difference_of_repeating_series(self):
        series = np.tile([3.0, 1.0, 4.0, 1.0, 5.0], 6)
        np.testing.assert_array_equal(difference(series, 0, 1, 5), np.zeros(25))

    def test_output_length(self):
        assert difference(np.arange(50.0), 2, 1, 7).size == 50 - 2 - 7

    def test_integrate_recovers_series(self):
        series = np.random.default_rng(0).normal(size=80).cumsum()
        d, D, S = 1, 1, 4
        restored = integrate(difference(series, d, D, S), series[:d + S * D], d, D, S)
        np.testing.assert_allclose(restored, series, rtol=0, atol=1e-10)

    def test_too_short(self):
        with pytest.raises(DataError):
            difference([1.0, 2.0, 3.0], 0, 1, 3)

    def test_integrate_needs_matching_initials(self):
        with pytest.raises(DataError):
            integrate([1.0, 2.0], [0.0], 1, 1, 4)


class TestOrderAndModel:
    def test_order_bounds(self):
        with pytest.raises(ConfigError):
            SarimaOrder(p=6)
        with pytest.raises(ConfigError):
            SarimaOrder(Q=3, S=12)
        with pytest.raises(ConfigError):
            SarimaOrder(d=2, D=2, S=12)
        with pytest.raises(ConfigError):
            SarimaOrder(S=0)
        assert str(SarimaOrder(1, 0, 1, 1, 1, 0, 12)) == "(1,0,1)(1,1,0)[12]"

    def test_non_stationary_coefficients_rejected(self):
        with pytest.raises(DataError, match="non-stationary"):
            SarimaModel(SarimaOrder(p=1), phi=[1.2], last_observations=[0.0])

    def test_non_invertible_coefficients_rejected(self):
        with pytest.raises(DataError, match="non-invertible"):
            SarimaModel(SarimaOrder(q=1), theta=[-1.5], last_residuals=[0.0])

    def test_variance_must_be_positive(self):
        with pytest.raises(DataError):
            SarimaModel(SarimaOrder(), sigma2=0.0)

    def test_coefficient_count_must_match_order(self):
        with pytest.raises(DataError):
            SarimaModel(SarimaOrder(p=2), phi=[0.3], last_observations=[0.0, 0.0])


class TestFit:
    def test_ar1_coefficient(self):
        series = simulate_sarima(SarimaOrder(p=1), 3000, phi=[0.5], seed=1)
        model = fit_sarima(series, SarimaOrder(p=1))
        assert 0.4 <= model.phi[0] <= 0.6
        assert model.roots_ok()

    def test_white_noise_variance(self):
        series = np.random.default_rng(2).normal(0.0, 2.0, 2000)
        model = fit_sarima(series, SarimaOrder())
        assert model.sigma2 == pytest.approx(4.0, rel=0.1)
        assert model.intercept == pytest.approx(series.mean(), abs=0.05)

    def test_seasonal_ar_coefficient(self):
        order = SarimaOrder(P=1, S=12)
        series = simulate_sarima(order, 2400, Phi=[0.6], seed=3)
        model = fit_sarima(series, order)
        assert 0.5 <= model.Phi[0] <= 0.7

    @pytest.mark.slow
    def test_multiplicative_seasonal_ar_recovery(self):
        order = SarimaOrder(p=1, P=1, S=12)
        hits = 0
        for seed in range(20):
            series = simulate_sarima(order, 2400, phi=[0.5], Phi=[0.6], seed=200 + seed)
            model = fit_sarima(series, order)
            hits += abs(model.phi[0] - 0.5) <= 0.15 and abs(model.Phi[0] - 0.6) <= 0.15
        assert hits >= 18

    def test_arma_fit_keeps_invertibility(self):
        order = SarimaOrder(p=1, q=1)
        series = simulate_sarima(order, 1500, phi=[0.6], theta=[0.4], seed=4)
        model = fit_sarima(series, order)
        assert model.roots_ok(margin=1e-6)
        assert model.last_observations.size == 1
        assert model.last_residuals.size == 1

    def test_no_intercept_when_differenced(self):
        series = np.random.default_rng(5).normal(size=300).cumsum() + 50.0
        model = fit_sarima(series, SarimaOrder(d=1, q=1))
        assert model.intercept == 0.0

    def test_too_short_for_order(self):
        with pytest.raises(DataError):
            fit_sarima(np.random.default_rng(0).normal(size=40), SarimaOrder(p=2, q=2))

    def test_information_criteria(self):
        model = fit_sarima(np.random.default_rng(6).normal(size=500), SarimaOrder(p=1))
        assert information_criterion(model, "aicc") == model.aicc
        assert information_criterion(model, "bic") > information_criterion(model, "aic")
        with pytest.raises(ConfigError):
            information_criterion(model, "hqic")

    @pytest.mark.slow
    def test_true_order_scores_no_worse_than_nested_one(self):
        wins = 0
        for seed in range(20):
            series = simulate_sarima(SarimaOrder(p=2), 500, phi=[0.5, 0.3], seed=seed)
            smaller = fit_sarima(series, SarimaOrder(p=1), css_start=2)
            true = fit_sarima(series, SarimaOrder(p=2), css_start=2)
            wins += true.aicc <= smaller.aicc
        assert wins >= 16


class TestDifferencingChoice:
    def test_square_wave_gets_seasonal_difference(self):
        rng = np.random.default_rng(7)
        wave = np.tile(np.r_[np.ones(6), -np.ones(6)], 20) + rng.normal(0.0, 0.05, 240)
        d, D = choose_differencing(wave, 12)
        assert D == 1
        assert select_order(wave, 12, config=SMALL_BOX).D == 1

    def test_random_walk_gets_ordinary_difference(self):
        walk = np.random.default_rng(8).normal(size=500).cumsum()
        assert kpss_statistic(walk) > 0.739
        assert select_order(walk, 1, config=SMALL_BOX).d >= 1

    def test_white_noise_is_left_alone(self):
        noise = np.random.default_rng(9).normal(size=500)
        assert kpss_statistic(noise) < 0.739
        assert choose_differencing(noise, 12) == (0, 0)

    @pytest.mark.slow
    def test_white_noise_selects_empty_order(self):
        hits = 0
        for seed in range(20):
            noise = np.random.default_rng(100 + seed).normal(size=600)
            hits += select_order(noise, 12) == SarimaOrder(S=12)
        assert hits >= 18

    def test_trend_with_high_seasonal_autocorrelation_gets_seasonal_difference(self):
        t = np.arange(600.0)
        trend = t + np.random.default_rng(17).normal(0.0, 1.0, t.size)
        assert choose_differencing(trend, 12)[1] == 1

    def test_grid_and_stepwise_agree_on_ar1(self):
        series = simulate_sarima(SarimaOrder(p=1), 400, phi=[0.8], seed=10)
        config = SarimaConfig(max_p=2, max_q=1, max_P=0, max_Q=0, ic="bic")
        grid = select_order(series, 1, search="grid", config=config)
        stepwise = select_order(series, 1, search="stepwise", config=config)
        assert grid == stepwise
        assert grid.p >= 1


class TestSearchGuards:
    def test_cancelling_pair_is_detected(self):
        model = SarimaModel(SarimaOrder(p=1, q=1), phi=[0.5], theta=[-0.45], last_observations=[0.0], last_residuals=[0.0])
        assert has_common_factor(model)

    def test_distinct_factors_are_kept(self):
        model = SarimaModel(SarimaOrder(p=1, q=1), phi=[0.6], theta=[0.4], last_observations=[0.0], last_residuals=[0.0])
        assert not has_common_factor(model)

    def test_seasonal_factors_are_checked(self):
        model = SarimaModel(SarimaOrder(P=1, Q=1, S=4), Phi=[0.3], Theta=[-0.3],
                            last_observations=np.zeros(4), last_residuals=np.zeros(4))
        assert has_common_factor(model)
        assert not has_common_factor(model, tolerance=0.0)

    def test_large_margin_keeps_the_empty_model(self):
        series = simulate_sarima(SarimaOrder(p=1), 400, phi=[0.8], seed=10)
        config = SarimaConfig(max_p=2, max_q=1, max_P=0, max_Q=0, min_improvement=1000.0)
        order = select_order(series, 1, config=config)
        assert (order.p, order.q) == (0, 0)

    def test_margin_must_be_nonnegative(self):
        with pytest.raises(ConfigError):
            SarimaConfig(min_improvement=-1.0)
        with pytest.raises(ConfigError):
            SarimaConfig(cancel_tolerance=-0.1)


class TestForecast:
    def test_random_walk_repeats_last_value(self):
        model = SarimaModel(SarimaOrder(d=1), last_observations=[3.0, 7.0, 5.0])
        np.testing.assert_allclose(forecast_sarima(model, 6), 5.0)

    def test_ar1_geometric_decay(self):
        model = SarimaModel(SarimaOrder(p=1), phi=[0.5], last_observations=[8.0])
        np.testing.assert_allclose(forecast_sarima(model, 3), [4.0, 2.0, 1.0])

    def test_seasonal_ar_reaches_back_one_period(self):
        model = SarimaModel(SarimaOrder(P=1, S=4), Phi=[0.9], last_observations=[1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(forecast_sarima(model, 4), [0.9, 1.8, 2.7, 3.6])

    def test_one_step_matches_fitted_recursion(self):
        series = simulate_sarima(SarimaOrder(p=1), 600, phi=[0.7], intercept=10.0, seed=11)
        model = fit_sarima(series, SarimaOrder(p=1))
        expected = model.intercept + model.phi[0] * (series[-1] - model.intercept)
        assert forecast_sarima(model, 1)[0] == pytest.approx(expected, rel=1e-12)

    def test_origins_reproduce_stored_state(self):
        order = SarimaOrder(p=1, q=1)
        series = simulate_sarima(order, 800, phi=[0.5], theta=[0.3], seed=12)
        model = fit_sarima(series, order)
        at_end = sarima_forecast_origins(model, series, [series.size], 5)[0]
        np.testing.assert_allclose(at_end, forecast_sarima(model, 5), rtol=1e-10)

    def test_origins_ignore_values_after_the_origin(self):
        order = SarimaOrder(p=1, d=1, q=1)
        series = np.random.default_rng(13).normal(size=300).cumsum()
        model = fit_sarima(series[:200], order)
        changed = series.copy()
        changed[250:] += 100.0
        first = sarima_forecast_origins(model, series, [210, 240], 5)
        second = sarima_forecast_origins(model, changed, [210, 240], 5)
        np.testing.assert_array_equal(first, second)

    def test_with_history_forecasts_from_new_tail(self):
        order = SarimaOrder(p=1)
        series = simulate_sarima(order, 500, phi=[0.6], seed=14)
        model = fit_sarima(series[:400], order)
        moved = sarima_with_history(model, series)
        np.testing.assert_allclose(moved.phi, model.phi)
        assert moved.last_observations[-1] == series[-1]

    def test_horizon_limits(self):
        model = SarimaModel(SarimaOrder(p=1), phi=[0.5], last_observations=[8.0])
        with pytest.raises(DataError):
            forecast_sarima(model, 0)
        with pytest.raises(DataError, match="horizon too long"):
            forecast_sarima(model, 11)


def test_simulation_is_seeded():
    order = SarimaOrder(p=1, q=1, P=1, S=6)
    first = simulate_sarima(order, 200, phi=[0.4], theta=[0.2], Phi=[0.5], seed=15)
    second = simulate_sarima(order, 200, phi=[0.4], theta=[0.2], Phi=[0.5], seed=15)
    np.testing.assert_array_equal(first, second)
    assert first.shape == (200,)


def test_model_file_reloads_the_same_forecasts(tmp_path):
    order = SarimaOrder(p=1, q=1, P=1, S=6)
    series = simulate_sarima(order, 900, phi=[0.4], theta=[0.2], Phi=[0.5], seed=16)
    model = fit_sarima(series, order)
    path = tmp_path / "model.sarima"
    save_sarima(model, path, header="adaensemble test")
    loaded = load_sarima(path)
    assert loaded.order == order
    np.testing.assert_array_equal(forecast_sarima(loaded, 12), forecast_sarima(model, 12))
