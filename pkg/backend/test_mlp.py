"""
Tests for the perceptron forecaster and the shared training utilities
"""

import math

import numpy as np
import pytest
from scipy.special import expit

from errors import ConfigError, DataError, NumericalError
from mlp import (
    MlpConfig,
    MlpModel,
    fit_mlp_forecaster,
    fit_recombiner,
    init_params,
    load_mlp,
    mlp_forecast_recursive,
    mlp_forward,
    mlp_gradient,
    mlp_predict,
    mlp_train,
    save_mlp,
    select_hidden_size,
)
from timeseries import MinMaxScaler
from training import (
    TrainConfig,
    choose_hidden_size,
    chronological_split,
    derive_seed,
    make_lagged_pairs,
    make_windows,
    read_weights,
    run_sgd,
    search_hidden_size,
    select_lags,
    write_weights,
)


def random_model(p=3, q=4, seed=0, **kwargs):
    return MlpModel(params=init_params(p, q, seed), lags=tuple(range(1, p + 1)), **kwargs)


def finite_difference(model, x, y, step=1e-5):
    grads = {}
    for name, value in model.params.items():
        grad = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            original = value[idx]
            value[idx] = original + step
            plus = np.mean((np.array([mlp_forward(model, row) for row in x]) - y) ** 2)
            value[idx] = original - step
            minus = np.mean((np.array([mlp_forward(model, row) for row in x]) - y) ** 2)
            value[idx] = original
            grad[idx] = (plus - minus) / (2 * step)
        grads[name] = grad
    return grads


class TestForward:
    def test_zero_weights_give_output_bias(self):
        model = MlpModel.from_weights(np.zeros((2, 3)), np.zeros(2), np.zeros(2), 0.7)
        assert mlp_forward(model, [5.0, -1.0, 2.0]) == pytest.approx(0.7)

    def test_single_unit(self):
        model = MlpModel.from_weights([[1.0]], [0.0], [2.0], 0.0)
        assert mlp_forward(model, [0.0]) == pytest.approx(1.0)

    def test_matches_hand_evaluation(self):
        model = random_model(p=4, q=3, seed=12)
        x = np.array([0.2, -0.4, 0.9, 0.1])
        p = model.params
        expected = p["alpha0"][0]
        for j in range(3):
            z = p["beta0"][j] + sum(p["beta"][j, i] * x[i] for i in range(4))
            expected += p["alpha"][j] / (1.0 + math.exp(-z))
        assert mlp_forward(model, x) == pytest.approx(expected, abs=1e-12)

    def test_output_is_bounded_by_output_weights(self):
        model = random_model(p=2, q=5, seed=4)
        bound = abs(model.params["alpha0"][0]) + np.abs(model.params["alpha"]).sum()
        for x in np.random.default_rng(1).normal(scale=50, size=(20, 2)):
            assert abs(mlp_forward(model, x)) <= bound

    def test_hidden_unit_permutation_leaves_output_unchanged(self):
        model = random_model(p=3, q=4, seed=8)
        perm = [2, 0, 3, 1]
        p = model.params
        permuted = MlpModel.from_weights(p["beta"][perm], p["beta0"][perm], p["alpha"][perm], p["alpha0"][0])
        x = [0.3, 0.1, -0.2]
        assert mlp_forward(permuted, x) == pytest.approx(mlp_forward(model, x), abs=1e-14)

    def test_size_mismatch(self):
        with pytest.raises(DataError):
            mlp_forward(random_model(p=3), [1.0, 2.0])

    def test_non_finite_weights_rejected(self):
        with pytest.raises(DataError):
            MlpModel.from_weights([[np.nan]], [0.0], [1.0], 0.0)


class TestGradient:
    def test_zero_error_batch(self):
        model = random_model(seed=2)
        x = np.random.default_rng(2).uniform(size=(6, 3))
        y = np.array([mlp_forward(model, row) for row in x])
        for g in mlp_gradient(model, (x, y)).values():
            np.testing.assert_allclose(g, 0.0, atol=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(p=3, q=4, seed=seed)
        x, y = rng.uniform(size=(8, 3)), rng.uniform(size=8)
        analytic = mlp_gradient(model, (x, y))
        numeric = finite_difference(model, x, y)
        for name in analytic:
            scale = max(np.abs(analytic[name]).max(), 1e-8)
            assert np.abs(analytic[name] - numeric[name]).max() / scale < 1e-4

    def test_duplicated_batch(self):
        model = random_model(seed=5)
        rng = np.random.default_rng(5)
        x, y = rng.uniform(size=(4, 3)), rng.uniform(size=4)
        single = mlp_gradient(model, (x, y))
        doubled = mlp_gradient(model, (np.vstack([x, x]), np.r_[y, y]))
        for name in single:
            np.testing.assert_allclose(doubled[name], single[name], rtol=1e-12, atol=1e-15)


class TestTrain:
    def data(self, n=120):
        t = np.arange(n + 3)
        series = 0.5 + 0.3 * np.sin(t / 4.0)
        return make_lagged_pairs(series, (1, 2, 3))

    def test_zero_epochs_keeps_initialization(self):
        model = mlp_train(self.data(), 3, 4, TrainConfig(epochs=0), seed=3)
        for name, value in init_params(3, 4, 3).items():
            np.testing.assert_array_equal(model.params[name], value)

    def test_more_epochs_do_not_increase_loss(self):
        one = mlp_train(self.data(), 3, 4, TrainConfig(epochs=1), seed=1)
        hundred = mlp_train(self.data(), 3, 4, TrainConfig(epochs=100), seed=1)
        assert hundred.train_mse <= one.train_mse

    def test_same_seed_same_weights(self):
        first = mlp_train(self.data(), 3, 4, TrainConfig(epochs=20), seed=9)
        second = mlp_train(self.data(), 3, 4, TrainConfig(epochs=20), seed=9)
        for name in first.params:
            np.testing.assert_array_equal(first.params[name], second.params[name])

    @pytest.mark.slow
    def test_learns_xor(self):
        x = np.tile([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], (5, 1))
        y = np.tile([0.0, 1.0, 1.0, 0.0], 5)
        config = TrainConfig(learning_rate=0.5, epochs=5000, batch_size=4)
        best = min(mlp_train((x, y), 2, 4, config, seed=s).train_mse for s in range(3))
        assert best < 0.05

    def test_shape_mismatch(self):
        x, y = self.data()
        with pytest.raises(DataError):
            mlp_train((x, y), 2, 4, TrainConfig(epochs=1))

    def test_divergence_reports_epoch(self):
        def exploding(params, x, y):
            return float("nan"), {"w": np.zeros(1)}

        with pytest.raises(NumericalError, match="diverged at epoch 1"):
            run_sgd({"w": np.zeros(1)}, exploding, np.zeros((4, 1)), np.zeros(4), TrainConfig(epochs=3), 0)

    def test_gradient_clipping(self):
        def steep(params, x, y):
            return 1.0, {"w": np.array([30.0, 40.0])}

        params = {"w": np.zeros(2)}
        run_sgd(params, steep, np.zeros((1, 1)), np.zeros(1), TrainConfig(learning_rate=1.0, epochs=1, clip_norm=1.0), 0)
        np.testing.assert_allclose(params["w"], [-0.6, -0.8])

    def test_early_stopping_restores_the_best_epoch(self):
        calls = []

        def toward_one(params, x, y):
            calls.append(1)
            return float((params["w"][0] - 1.0) ** 2), {"w": 2.0 * (params["w"] - 1.0)}

        def distance_to_half(params):
            return float((params["w"][0] - 0.5) ** 2)

        params = {"w": np.zeros(1)}
        config = TrainConfig(learning_rate=0.1, epochs=100, patience=2)
        run_sgd(params, toward_one, np.zeros((1, 1)), np.zeros(1), config, 0, distance_to_half)
        # w after epoch k is 1 - 0.8^k; epoch 3 is closest to 0.5, two worse epochs follow
        assert params["w"][0] == pytest.approx(1.0 - 0.8 ** 3)
        assert len(calls) == 5 + 1

    def test_patience_zero_runs_every_epoch(self):
        params = {"w": np.zeros(1)}

        def toward_one(params, x, y):
            return float((params["w"][0] - 1.0) ** 2), {"w": 2.0 * (params["w"] - 1.0)}

        run_sgd(params, toward_one, np.zeros((1, 1)), np.zeros(1), TrainConfig(learning_rate=0.1, epochs=10), 0,
                lambda p: float((p["w"][0] - 0.5) ** 2))
        assert params["w"][0] == pytest.approx(1.0 - 0.8 ** 10)

    def test_negative_patience_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig(patience=-1)


class TestHiddenSize:
    def test_single_candidate(self):
        x, y = TestTrain().data()
        q, score = select_hidden_size((x, y), 3, [5], TrainConfig(epochs=5), seed=0)
        assert q == 5
        assert score >= 0

    def test_ties_go_to_smallest(self):
        assert choose_hidden_size({4: 0.1000, 6: 0.10005, 9: 0.1}, tolerance=1e-3) == 4
        assert choose_hidden_size({4: 0.2, 6: 0.1}, tolerance=1e-3) == 6

    def test_chosen_score_is_minimal(self):
        scores = {4: 0.30, 5: 0.12, 6: 0.25, 7: 0.18}
        chosen, score, all_scores = search_hidden_size(
            scores, lambda q, seed: q, lambda q: scores[q], 0, TrainConfig(), "test"
        )
        assert chosen == 5
        assert score == min(all_scores.values())

    def test_candidate_seeds_do_not_depend_on_order(self):
        seen = {}
        search_hidden_size([6, 4, 5], lambda q, seed: seen.setdefault(q, seed), lambda s: 1.0, 11, TrainConfig(), "x")
        assert seen == {q: derive_seed(11, "x", q) for q in (4, 5, 6)}

    def test_empty_candidates(self):
        x, y = TestTrain().data()
        with pytest.raises(ConfigError):
            select_hidden_size((x, y), 3, [], TrainConfig(epochs=1))


class TestForecast:
    def scaled_model(self):
        return random_model(p=3, q=4, seed=6, scaler=MinMaxScaler(low=100.0, high=300.0))

    def test_one_step_equals_forward_on_last_window(self):
        model = self.scaled_model()
        history = np.array([150.0, 220.0, 180.0, 260.0, 240.0])
        window = model.scaler.apply(history[::-1][:3])
        expected = model.scaler.invert(mlp_forward(model, window))
        assert mlp_forecast_recursive(model, history, 1)[0] == pytest.approx(float(expected), rel=1e-12)

    def test_constant_model(self):
        model = MlpModel.from_weights(np.ones((2, 2)), np.zeros(2), np.zeros(2), 3.5, lags=(1, 2))
        np.testing.assert_allclose(mlp_forecast_recursive(model, [1.0, 2.0, 3.0], 4), 3.5)

    def test_three_steps_equal_manual_chaining(self):
        model = self.scaled_model()
        buffer = list(model.scaler.apply([150.0, 220.0, 180.0, 260.0]))
        manual = []
        for _ in range(3):
            y = mlp_forward(model, [buffer[-1], buffer[-2], buffer[-3]])
            buffer.append(y)
            manual.append(float(model.scaler.invert(y)))
        forecast = mlp_forecast_recursive(model, [150.0, 220.0, 180.0, 260.0], 3)
        np.testing.assert_allclose(forecast, manual, rtol=1e-12)

    def test_invalid_horizon_and_short_history(self):
        model = self.scaled_model()
        with pytest.raises(DataError):
            mlp_forecast_recursive(model, [1.0, 2.0, 3.0], 0)
        with pytest.raises(DataError):
            mlp_forecast_recursive(model, [1.0, 2.0], 1)


def test_fit_forecaster_on_sinusoid():
    series = 400 + 100 * np.sin(2 * np.pi * np.arange(300) / 24)
    config = MlpConfig(hidden_sizes=(4, 5), max_lag=6, n_lags=3, train=TrainConfig(epochs=30))
    model = fit_mlp_forecaster(series, config, seed=2)
    assert len(model.lags) == 3
    assert max(model.lags) <= 6
    assert model.hidden_size in (4, 5)
    forecast = mlp_forecast_recursive(model, series, 5)
    assert forecast.shape == (5,)
    assert np.all(np.isfinite(forecast))


def test_recombiner_maps_raw_inputs():
    rng = np.random.default_rng(0)
    inputs = rng.normal(size=(200, 3)) * [50.0, 10.0, 5.0] + [300.0, 0.0, 0.0]
    target = inputs.sum(axis=1)
    model = fit_recombiner(inputs, target, hidden_sizes=(2,), config=TrainConfig(epochs=300), seed=1)
    assert model.input_size == 3
    assert len(model.input_scalers) == 3
    rmse = np.sqrt(np.mean((mlp_predict(model, inputs) - target) ** 2))
    assert rmse < target.std()


def test_weights_file_reloads_the_same_model(tmp_path):
    model = random_model(p=3, q=4, seed=7, scaler=MinMaxScaler(1.0, 9.0),
                         input_scalers=tuple(MinMaxScaler(0.0, float(j + 1)) for j in range(3)))
    path = tmp_path / "model.mlp"
    save_mlp(model, path, header="adaensemble test")
    loaded = load_mlp(path)
    for name in model.params:
        np.testing.assert_array_equal(loaded.params[name], model.params[name])
    assert loaded.lags == model.lags
    assert loaded.input_scalers == model.input_scalers
    rows = np.random.default_rng(3).uniform(size=(5, 3))
    np.testing.assert_array_equal(mlp_predict(loaded, rows), mlp_predict(model, rows))


class TestTrainingUtilities:
    def test_derive_seed_is_stable_and_label_specific(self):
        assert derive_seed(7, "lstm", 3) == derive_seed(7, "lstm", 3)
        assert derive_seed(7, "lstm", 3) != derive_seed(7, "lstm", 4)
        assert derive_seed(7, "mlp") != derive_seed(8, "mlp")
        assert 0 <= derive_seed(2 ** 64 - 1, "x") < 2 ** 63

    def test_lagged_pairs(self):
        x, y = make_lagged_pairs(np.arange(6.0), (1, 3))
        np.testing.assert_array_equal(x, [[2.0, 0.0], [3.0, 1.0], [4.0, 2.0]])
        np.testing.assert_array_equal(y, [3.0, 4.0, 5.0])

    def test_windows_oldest_first(self):
        x, y = make_windows(np.arange(5.0), 3)
        np.testing.assert_array_equal(x, [[0.0, 1.0, 2.0], [1.0, 2.0, 3.0]])
        np.testing.assert_array_equal(y, [3.0, 4.0])
        with pytest.raises(DataError):
            make_windows(np.arange(3.0), 3)

    def test_chronological_split_keeps_order(self):
        x = np.arange(10.0)[:, None]
        (x_fit, y_fit), (x_val, y_val) = chronological_split(x, np.arange(10.0), 0.2)
        np.testing.assert_array_equal(y_fit, np.arange(8.0))
        np.testing.assert_array_equal(y_val, [8.0, 9.0])

    def test_acf_lags_strongest_first(self):
        rng = np.random.default_rng(0)
        ar = np.zeros(2000)
        for t in range(1, 2000):
            ar[t] = 0.9 * ar[t - 1] + rng.normal()
        assert select_lags(ar, max_lag=24, n_lags=3, method="acf") == (1, 2, 3)

    def test_ar_aic_lags_are_contiguous(self):
        rng = np.random.default_rng(1)
        ar = np.zeros(2000)
        for t in range(2, 2000):
            ar[t] = 0.5 * ar[t - 1] + 0.3 * ar[t - 2] + rng.normal()
        lags = select_lags(ar, max_lag=12, method="ar_aic")
        assert lags == tuple(range(1, len(lags) + 1))
        assert 2 <= len(lags) <= 6

    def test_unknown_lag_method(self):
        with pytest.raises(ConfigError):
            select_lags(np.sin(np.arange(100.0)), method="pmi")

    def test_weights_keep_full_precision(self, tmp_path):
        path = tmp_path / "w.txt"
        block = np.array([[1.0 / 3.0, math.pi], [-1e-300, 2.0 ** 0.5]])
        write_weights(path, {"kind": "test", "note": "two words"}, {"w": block}, header="h")
        meta, blocks = read_weights(path)
        assert meta == {"kind": "test", "note": "two words"}
        np.testing.assert_array_equal(blocks["w"], block)

    def test_invalid_train_config(self):
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(momentum=1.0)
        with pytest.raises(ConfigError):
            TrainConfig(clip_norm=0.0)


def test_logistic_hidden_layer():
    model = MlpModel.from_weights([[2.0, -1.0]], [0.5], [1.0], 0.0)
    assert mlp_forward(model, [1.0, 1.0]) == pytest.approx(float(expit(1.5)))
