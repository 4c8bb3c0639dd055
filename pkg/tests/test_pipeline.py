import os
import numpy as np
import pytest
from Windcast.ForecastController import ForecastController, run_ablation, run_pipeline
from Windcast.Models import Pipeline
from Windcast.Models.Config import VARIANTS, PipelineConfig, load_config
from Windcast.Models.Errors import InvalidInputError, StageError
from Windcast.Models.ForecastUtilities import synthetic_series
from Windcast.Models.Logger import write_table
from Windcast.Models.Lstm import LstmConfig
from Windcast.Models.Pipeline import ModePlan, SplitSpec
from Windcast.Optimizers.Swarms import EbqpsoConfig

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")

SMALL = {
    "svmd.max_modes": 3,
    "ebqpso.population": 6,
    "ebqpso.generations": 5,
    "lstm.hidden_size": 8,
    "lstm.epochs": 40,
    "lstm.learning_rate": 1e-2,
    "pipeline.window_range": [1, 8],
}


def small_config(**overrides):
    return load_config(None, {**SMALL, **overrides})


def sine(length=480, period=24.0, offset=9.0):
    return offset + np.sin(2 * np.pi * np.arange(length) / period)


def test_make_windows_example():
    windowed = Pipeline.make_windows([1, 2, 3, 4, 5], 2)
    np.testing.assert_array_equal(windowed.inputs, [[1, 2], [2, 3], [3, 4]])
    np.testing.assert_array_equal(windowed.targets, [3, 4, 5])
    assert len(windowed) == 3


def test_make_windows_edges():
    single = Pipeline.make_windows([1.0, 2.0], 1)
    np.testing.assert_array_equal(single.inputs, [[1.0]])
    with pytest.raises(InvalidInputError):
        Pipeline.make_windows([1.0, 2.0], 2)
    with pytest.raises(InvalidInputError):
        Pipeline.make_windows([1.0, 2.0, 3.0], 0)


def test_split_sizes():
    assert SplitSpec().sizes(480) == (336, 72, 72)
    assert SplitSpec().sizes(1000) == (700, 150, 150)
    with pytest.raises(InvalidInputError):
        SplitSpec().sizes(3)
    with pytest.raises(InvalidInputError):
        SplitSpec(0.8, 0.15, 0.15)


def test_segments_are_contiguous():
    train, validation, test = SplitSpec().segments(np.arange(20))
    np.testing.assert_array_equal(np.concatenate([train, validation, test]), np.arange(20))
    assert (len(train), len(validation), len(test)) == (14, 3, 3)


def test_impute_fills_with_train_mean():
    imputation = Pipeline.impute([1.0, np.nan, 3.0], 3)
    np.testing.assert_array_equal(imputation.values, [1.0, 2.0, 3.0])
    assert imputation.missing_count == 1 and imputation.outlier_count == 0


def test_impute_ignores_test_values():
    values = np.r_[np.arange(1.0, 11.0), [np.nan], np.full(5, 50.0)]
    imputation = Pipeline.impute(values, 11, outlier_sigma=100.0)
    assert imputation.mean == 5.5
    assert imputation.values[10] == 5.5
    np.testing.assert_array_equal(imputation.values[11:], np.full(5, 50.0))


def test_impute_replaces_outliers():
    values = np.r_[np.tile([1.0, 2.0], 10), [1.0, 10.0, 2.0]]
    imputation = Pipeline.impute(values, 20)
    assert imputation.outlier_count == 1
    assert imputation.values[21] == 1.5
    assert imputation.values[20] == 1.0


def test_impute_needs_observed_train_values():
    with pytest.raises(InvalidInputError):
        Pipeline.impute([np.nan, np.nan, 1.0], 2)


def test_load_series_flags_missing_cells(tmp_path):
    path = tmp_path / "wind.csv"
    path.write_text("timestamp,wind_speed\n0,1\n1,\n2,3\n")
    series = Pipeline.load_series(str(path), "wind_speed")
    np.testing.assert_array_equal(series.missing, [False, True, False])
    assert series.values[0] == 1.0 and np.isnan(series.values[1])


def test_load_series_missing_column(tmp_path):
    path = tmp_path / "wind.csv"
    path.write_text("timestamp,speed\n0,1\n")
    with pytest.raises(InvalidInputError):
        Pipeline.load_series(str(path), "wind_speed")


def test_error_sequence():
    errors = Pipeline.error_sequence([3.0, 4.0, 5.0], [[1.0, 1.0, 1.0], [1.5, 2.0, 2.0]])
    np.testing.assert_array_equal(errors, [0.5, 1.0, 2.0])
    with pytest.raises(InvalidInputError):
        Pipeline.error_sequence([1.0, 2.0], [[1.0, 2.0, 3.0]])


def test_align_and_aggregate():
    first = np.arange(13.0)
    second = np.full(10, 100.0)
    total = Pipeline.align_and_aggregate([(2, first), (5, second)])
    assert total.size == 10
    np.testing.assert_array_equal(total, first[3:] + 100.0)


def test_align_and_aggregate_rejects_mismatch():
    with pytest.raises(InvalidInputError):
        Pipeline.align_and_aggregate([(2, np.zeros(13)), (5, np.zeros(9))])
    with pytest.raises(InvalidInputError):
        Pipeline.align_and_aggregate([])


def test_scaler_uses_given_statistics():
    scaler = Pipeline.Scaler.fit([1.0, 3.0])
    assert scaler == (2.0, 1.0)
    np.testing.assert_array_equal(scaler.inverse(scaler.transform([5.0, -1.0])), [5.0, -1.0])
    assert Pipeline.Scaler.fit([4.0, 4.0]).scale == 1.0


def test_optimize_mode_on_clean_sine():
    pipeline = PipelineConfig(window_range=(1, 10))
    config = EbqpsoConfig(population=8, generations=10, seed=1)
    plan = Pipeline.optimize_mode(sine(), SplitSpec(), config, pipeline)
    assert plan.validation_mse < 0.05
    assert 1 <= plan.window_opt <= 10
    assert len(plan.fitness_history) == 10
    again = Pipeline.optimize_mode(sine(), SplitSpec(), config, pipeline)
    assert again.to_dict() == plan.to_dict()


def test_optimize_mode_on_linear_trend():
    config = EbqpsoConfig(population=25, generations=30)
    plan = Pipeline.optimize_mode(np.arange(600) / 600, SplitSpec(), config, PipelineConfig())
    assert plan.validation_mse < 1e-6


def test_optimize_mode_in_collapsed_box():
    pipeline = PipelineConfig(gamma_range=(10.0, 10.0), sigma2_range=(1.0, 1.0), window_range=(3, 3))
    plan = Pipeline.optimize_mode(sine(), SplitSpec(), EbqpsoConfig(population=4, generations=5), pipeline)
    assert plan.gamma_opt == pytest.approx(10.0)
    assert plan.sigma2_opt == pytest.approx(1.0)
    assert plan.window_opt == 3


def test_optimize_mode_needs_room_for_the_window():
    pipeline = PipelineConfig(window_range=(1, 25))
    with pytest.raises(InvalidInputError):
        Pipeline.optimize_mode(sine(100), SplitSpec(), EbqpsoConfig(population=4, generations=5), pipeline)


def test_forecast_mode_length():
    plan = ModePlan(mode_index=2, gamma_opt=100.0, sigma2_opt=1.0, window_opt=4, validation_mse=0.0)
    forecast = Pipeline.forecast_mode(sine(), SplitSpec(), plan)
    assert forecast.name == "mode_2"
    assert forecast.predictions.size == 72 - 4
    np.testing.assert_allclose(forecast.predictions, sine()[412:], atol=0.05)


def test_forecast_lstm_length():
    config = LstmConfig(hidden_size=4, window=3, epochs=5, learning_rate=1e-2)
    forecast = Pipeline.forecast_lstm(sine(), SplitSpec(), config)
    assert forecast.name == "residual"
    assert forecast.predictions.size == 72 - 3
    assert len(forecast.loss_history) == 5


@pytest.fixture(scope="module")
def wind():
    values = synthetic_series(480, seed=3)
    values[450] = np.nan
    return values


@pytest.fixture(scope="module")
def full_report(wind):
    return ForecastController(small_config(), wind).run()


def test_full_pipeline_shapes(full_report):
    report = full_report
    m_max = report.manifest["m_max"]
    assert report.variant == "svmd_lssvm_lstm"
    assert len(report.predicted) == 72 - m_max
    assert report.indices[0] == 408 + m_max and report.indices[-1] == 479
    assert report.error_prediction is not None
    assert len(report.components) == len(report.decomposition.modes) + 1
    assert len(report.plans) == len(report.decomposition.modes)
    assert set(report.loss_traces) == {"residual"}
    assert np.all(np.isfinite(report.predicted))


def test_full_pipeline_manifest(full_report):
    manifest = full_report.manifest
    assert manifest["split"] == {"train": 336, "validation": 72, "test": 72}
    assert manifest["retrain_data"] == "train+validation"
    assert manifest["decomposition_before_split"] is True
    assert manifest["imputed"] == 1
    assert manifest["num_modes"] == len(manifest["mode_plans"])
    assert len(manifest["config_digest"]) == 64


def test_imputation_uses_train_statistics_only(wind, full_report):
    assert full_report.imputation.mean == pytest.approx(np.mean(wind[:336]), rel=1e-12)
    assert full_report.actual[450 - full_report.indices[0]] == full_report.imputation.mean


def test_full_pipeline_is_deterministic(wind, full_report):
    again = ForecastController(small_config(), wind).run()
    np.testing.assert_array_equal(again.predicted, full_report.predicted)
    assert again.metrics == full_report.metrics


def test_run_pipeline_matches_controller(tmp_path, wind, full_report):
    path = str(tmp_path / "wind.csv")
    write_table(path, {"timestamp": range(480), "wind_speed": [v if np.isfinite(v) else "" for v in wind]})
    report = run_pipeline(None, {**SMALL, "io.input": path})
    np.testing.assert_allclose(report.predicted, full_report.predicted, rtol=0, atol=1e-12)
    lstm_only = run_ablation(small_config(**{"io.input": path}), "lstm")
    assert lstm_only.manifest["input"] == path
    assert lstm_only.manifest["m_max"] == 5


@pytest.mark.parametrize("variant", [v for v in VARIANTS if v != "svmd_lssvm_lstm"])
def test_every_variant_runs(wind, variant):
    report = ForecastController(small_config(), wind).run(variant)
    assert report.variant == variant
    assert len(report.predicted) == len(report.actual) == 72 - report.manifest["m_max"]
    assert set(report.metrics) == {"rmse", "mae", "mape_pct", "r2", "cc"}


def test_lssvm_variant_on_clean_signal():
    config = small_config(**{"ebqpso.population": 8, "ebqpso.generations": 10})
    report = ForecastController(config, sine()).run("lssvm_ebqpso")
    assert report.metrics["mape_pct"] < 1.0
    assert report.decomposition is None


def test_unknown_variant():
    with pytest.raises(InvalidInputError):
        ForecastController(small_config(), sine()).run("arima")


def test_stage_failures_are_tagged():
    with pytest.raises(StageError) as info:
        ForecastController(small_config(), np.ones(5)).run()
    assert info.value.stage == "split"
    assert info.value.exit_code == 2


def test_missing_input_path():
    with pytest.raises(StageError) as info:
        ForecastController(small_config()).run()
    assert info.value.stage == "load"


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_full_method_against_ablations_on_synthetic_data(seed):
    config = load_config(os.path.join(CONFIGS, "desk.yaml"))
    values = synthetic_series(1440, seed=seed)
    rmse = {variant: ForecastController(config, values).run(variant).metrics["rmse"]
            for variant in ("svmd_lssvm_lstm", "lssvm_ebqpso", "svmd_lssvm")}
    assert rmse["svmd_lssvm_lstm"] <= rmse["lssvm_ebqpso"]
    assert rmse["svmd_lssvm_lstm"] <= 1.05 * rmse["svmd_lssvm"]
