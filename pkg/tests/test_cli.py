import json
import os
import numpy as np
import pytest
import main
from Windcast.Models.ForecastUtilities import read_csv_column, synthetic_series

SMALL_RUN = """\
svmd.max_modes: 3
ebqpso.population: 6
ebqpso.generations: 5
lstm.hidden_size: 8
lstm.epochs: 30
lstm.learning_rate: 1.0e-2
pipeline.window_range: [1, 6]
"""


@pytest.fixture
def wind_csv(tmp_path):
    path = str(tmp_path / "wind.csv")
    assert main.main(["synth", "--out", path, "--length", "480", "--seed", "2"]) == 0
    return path


@pytest.fixture
def run_config(tmp_path, wind_csv):
    path = tmp_path / "run.yaml"
    path.write_text(SMALL_RUN + f"io.input: {wind_csv}\n")
    return str(path)


def read_json(path):
    with open(path) as stream:
        return json.load(stream)


def test_synth_writes_the_series(wind_csv):
    values = read_csv_column(wind_csv, "wind_speed")
    np.testing.assert_array_equal(values, synthetic_series(480, seed=2))


def test_synth_with_holes(tmp_path):
    path = str(tmp_path / "holes.csv")
    assert main.main(["synth", "--out", path, "--length", "200", "--missing-rate", "0.1"]) == 0
    values = read_csv_column(path)
    assert values.size == 200
    assert np.isnan(values).any()


def test_metrics_command(tmp_path, capsys):
    actual, predicted = tmp_path / "actual.csv", tmp_path / "predicted.csv"
    actual.write_text("value\n1\n2\n3\n4\n")
    predicted.write_text("value\n2\n3\n4\n5\n")
    assert main.main(["metrics", "--actual", str(actual), "--predicted", str(predicted)]) == 0
    scores = json.loads(capsys.readouterr().out)
    assert scores["mae"] == 1.0 and scores["rmse"] == 1.0
    assert scores["mape_pct"] == 52.0833


def test_metrics_zero_actual_exits_2(tmp_path, capsys):
    actual, predicted = tmp_path / "actual.csv", tmp_path / "predicted.csv"
    actual.write_text("value\n0\n2\n")
    predicted.write_text("value\n1\n2\n")
    assert main.main(["metrics", "--actual", str(actual), "--predicted", str(predicted)]) == 2
    assert "windcast: error" in capsys.readouterr().err


def test_missing_input_exits_2(tmp_path, capsys):
    code = main.main(["decompose", "--input", str(tmp_path / "absent.csv"), "--out-dir", str(tmp_path / "out")])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_unknown_function_is_rejected():
    with pytest.raises(SystemExit):
        main.main(["bench-opt", "--function", "rosenbrock"])


def test_bench_single_algorithm(tmp_path, capsys):
    out = str(tmp_path / "bench.json")
    argv = ["bench-opt", "--function", "mccormick", "--pop", "6", "--gens", "5", "--trials", "2", "--out", out]
    assert main.main(argv) == 0
    report = read_json(out)
    assert len(report["per_trial_best"]) == 2
    assert json.loads(capsys.readouterr().out) == report


def test_bench_all_algorithms(capsys):
    argv = ["bench-opt", "--function", "sphere", "--dim", "3", "--pop", "5", "--gens", "3", "--trials", "1",
            "--algo", "all"]
    assert main.main(argv) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["algorithms"]) == {"pso", "qpso", "ebqpso"}
    assert report["dimension"] == 3


def test_decompose_command(tmp_path, wind_csv):
    out_dir = str(tmp_path / "modes")
    assert main.main(["decompose", "--input", wind_csv, "--out-dir", out_dir]) == 0
    summary = read_json(os.path.join(out_dir, "summary.json"))
    assert summary["num_modes"] >= 1
    assert len(os.listdir(os.path.join(out_dir, "modes"))) == summary["num_modes"]
    assert read_csv_column(os.path.join(out_dir, "residual.csv")).size == 480


def test_optimize_command(tmp_path, wind_csv, run_config):
    out = str(tmp_path / "plan.json")
    assert main.main(["optimize", "--input", wind_csv, "--config", run_config, "--out", out]) == 0
    plan = read_json(out)
    assert 1 <= plan["window_opt"] <= 6
    assert 1e-4 <= plan["gamma_opt"] <= 1e4


def test_forecast_reruns_are_identical(tmp_path, run_config):
    first, second = str(tmp_path / "first"), str(tmp_path / "second")
    assert main.main(["forecast", "--config", run_config, "--out-dir", first, "--trace"]) == 0
    assert main.main(["forecast", "--config", run_config, "--out-dir", second]) == 0
    for name in ("predictions.csv", "metrics.json", "manifest.json", os.path.join("models", "mode_0.json"),
                 os.path.join("models", "residual.json")):
        with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
            assert a.read() == b.read(), name
    with open(os.path.join(first, "loss_trace.csv")) as stream:
        lines = stream.read().splitlines()
    assert lines[0] == "epoch,loss"
    assert len(lines) == 31 and lines[1].startswith("1,")
    assert not os.path.exists(os.path.join(second, "loss_trace.csv"))
    assert set(read_json(os.path.join(first, "metrics.json"))) == {"rmse", "mae", "mape_pct", "r2", "cc"}


def test_forecast_variant_flag(tmp_path, run_config):
    out_dir = str(tmp_path / "lstm")
    assert main.main(["forecast", "--config", run_config, "--variant", "lstm", "--out-dir", out_dir]) == 0
    assert read_json(os.path.join(out_dir, "manifest.json"))["variant"] == "lstm"
    assert not os.path.exists(os.path.join(out_dir, "modes"))


def test_forecast_writes_model_dumps(tmp_path, run_config):
    out_dir = str(tmp_path / "models")
    assert main.main(["forecast", "--config", run_config, "--out-dir", out_dir]) == 0
    manifest = read_json(os.path.join(out_dir, "manifest.json"))
    lssvm = read_json(os.path.join(out_dir, "models", "mode_0.json"))
    assert set(lssvm) == {"gamma", "sigma2", "bias", "duals", "support_inputs"}
    assert len(lssvm["duals"]) == len(lssvm["support_inputs"])
    assert lssvm["gamma"] == manifest["mode_plans"][0]["gamma_opt"]
    lstm = read_json(os.path.join(out_dir, "models", "residual.json"))
    assert set(lstm) == {"config", "weights", "final_loss"}
    assert lstm["config"]["hidden_size"] == 8
    assert len(lstm["weights"]["head_b"]) == 1


def test_svmd_lstm_traces_each_component(tmp_path, run_config):
    out_dir = str(tmp_path / "svmd_lstm")
    argv = ["forecast", "--config", run_config, "--variant", "svmd_lstm", "--out-dir", out_dir, "--trace"]
    assert main.main(argv) == 0
    num_modes = read_json(os.path.join(out_dir, "manifest.json"))["num_modes"]
    traces = sorted(name for name in os.listdir(out_dir) if name.startswith("loss_trace"))
    if num_modes == 1:
        assert traces == ["loss_trace.csv"]
    else:
        assert traces == sorted(f"loss_trace_mode_{k}.csv" for k in range(num_modes))
    assert len(os.listdir(os.path.join(out_dir, "models"))) == num_modes
    with open(os.path.join(out_dir, traces[0])) as stream:
        assert stream.readline().strip() == "epoch,loss"


def test_uncaught_numerical_failure_exits_3(monkeypatch, capsys):
    def singular(args):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setitem(main.COMMANDS, "metrics", singular)
    assert main.main(["metrics", "--actual", "a.csv", "--predicted", "p.csv"]) == 3
    assert "LinAlgError" in capsys.readouterr().err
