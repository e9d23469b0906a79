"""Config resolution, experiment runner output and the command-line entrypoint."""

import io
import math

import numpy as np
import pandas as pd
import pytest

import app
from ers.config import ExperimentConfig, load_config, read_config_file
from ers.errors import ConfigError, DataError
from ers.experiment import (
    RESULT_HEADER,
    create_experiment_runner,
    emit_samples,
    mean_trials,
    results_frame,
    run_experiment,
    write_results,
)
from ers.models import finite_state_model, grid_oracle, random_finite_state_spec, write_observations_csv


def _config(**changes):
    values = dict(model="conditioned-rw", horizons=(8,), sizes=(6,), num_samples=40,
                  record_wall_time=False, check_bounds=True)
    values.update(changes)
    return ExperimentConfig(**values)


def _csv(rows):
    buffer = io.StringIO()
    write_results(rows, buffer)
    return buffer.getvalue()


# -- config -----------------------------------------------------------------

def test_yaml_sections(tmp_path):
    path = tmp_path / "table.yaml"
    path.write_text(
        "experiment:\n"
        "  t: [10, 20]\n"
        "  beta: [1, 2]\n"
        "  samples: 30\n"
        "  estimator: both\n"
        "model:\n"
        "  name: conditioned-rw\n"
        "  sigma: 0.3\n"
        "data:\n"
        "  seed: 4\n"
    )
    config = load_config(path, environ={})
    assert config.horizons == (10, 20)
    assert config.betas == (1.0, 2.0)
    assert config.model_params == {"sigma": 0.3}
    assert config.data_seed == 4
    assert list(config.cells(10)) == [10, 20]
    assert config.estimators() == ("ratio-mean", "frequency")


def test_precedence_env_then_file_then_overrides(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("experiment:\n  workers: 3\n")
    environ = {"ERS_WORKERS": "2", "ERS_SEED": "11", "ERS_CHECK_BOUNDS": "true"}

    assert load_config(environ=environ).workers == 2
    config = load_config(path, environ=environ)
    assert (config.workers, config.seed, config.check_bounds) == (3, 11, True)
    assert load_config(path, {"workers": 5, "seed": None}, environ=environ).workers == 5


@pytest.mark.parametrize("body,message", [
    ("experiment:\n  samples: [1\n", r"c\.yaml:\d+: invalid YAML"),
    ("experiment:\n  seed: 3\n  colour: red\n", r"c\.yaml:3: experiment\.colour: unknown field"),
    ("experiment:\n  seed: 3\n  samples: many\n", r"c\.yaml:3: experiment: num_samples: expected an integer"),
    ("data:\n  seed: x\n", r"c\.yaml:2: data: data_seed"),
    ("experiment:\n  t: [10, ten]\n", r"c\.yaml:2: experiment: horizons"),
    ("experiment:\n  seed: 1\nresults:\n  x: 1\n", r"c\.yaml:3: unknown section 'results'"),
    ("model:\n  name: brownian\n", r"c\.yaml:2: model\.name: unknown model 'brownian'"),
    ("experiment:\n  n: [10]\n  beta: [2]\n", "mutually exclusive"),
])
def test_config_errors_name_the_problem(tmp_path, body, message):
    path = tmp_path / "c.yaml"
    path.write_text(body)
    with pytest.raises(ConfigError, match=message):
        load_config(path, environ={})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        read_config_file(tmp_path / "absent.yaml")


def test_desk_scale_guard():
    config = ExperimentConfig(horizons=(500,), sizes=(2000,))
    with pytest.raises(ConfigError, match="--extended"):
        config.check_scale(500, 2000)
    ExperimentConfig(horizons=(500,), sizes=(2000,), extended=True).check_scale(500, 2000)


# -- experiment runner -------------------------------------------------------

def test_rows_are_identical_across_worker_counts():
    serial = _csv(run_experiment(_config(workers=1, estimator="both")))
    parallel = _csv(run_experiment(_config(workers=4, estimator="both")))
    assert serial == parallel
    lines = serial.splitlines()
    assert lines[0] == ",".join(RESULT_HEADER)
    assert len(lines) == 3
    assert lines[1].startswith("conditioned-rw,8,6,ratio-mean,")
    assert lines[1].endswith(",40,0,0.000")


def test_beta_grid_rows():
    rows = run_experiment(_config(sizes=(), betas=(0.5, 1.0), horizons=(4, 6), num_samples=10))
    assert [(row.horizon, row.n) for row in rows] == [(4, 2), (4, 4), (6, 3), (6, 6)]
    assert all(0.0 <= row.p_ers_percent <= 100.0 for row in rows)


def test_standard_error_shrinks_with_samples():
    errors = [run_experiment(_config(sizes=(40,), estimator="frequency", num_samples=k))[0].std_error
              for k in (125, 500, 2000)]
    assert errors[0] / errors[1] == pytest.approx(2.0, rel=0.2)
    assert errors[1] / errors[2] == pytest.approx(2.0, rel=0.2)


def test_two_point_rows_include_independent_rs():
    rows = run_experiment(_config(model="two-point", horizons=(), sizes=(2,), num_samples=4000,
                                  estimator="both"))
    by_name = {row.estimator: row for row in rows}
    assert set(by_name) == {"ratio-mean", "frequency", "independent-rs"}
    assert by_name["ratio-mean"].p_ers_percent == pytest.approx(87.5, abs=4 * by_name["ratio-mean"].std_error)
    assert by_name["independent-rs"].p_ers_percent == pytest.approx(93.75, abs=1.0)


def test_state_space_models_on_simulated_data():
    for name in ("nonlinear-ar", "stoch-vol"):
        rows = run_experiment(_config(model=name, horizons=(15,), sizes=(20,), num_samples=5))
        assert rows[0].model == name
        assert math.isfinite(rows[0].p_ers_percent)


def test_observation_file_sets_horizon(tmp_path):
    path = tmp_path / "y.csv"
    write_observations_csv(path, [0.1, -0.2, 0.05, 0.3])
    runner = create_experiment_runner(_config(model="stoch-vol", horizons=(), sizes=(5,), data_path=str(path)))
    assert runner.horizons() == (4,)
    with pytest.raises(ConfigError, match="exceeds the 4 available"):
        create_experiment_runner(_config(model="stoch-vol", horizons=(9,), data_path=str(path))).build_model(9)


def test_missing_data_file():
    with pytest.raises(DataError, match="not found"):
        run_experiment(_config(model="nonlinear-ar", data_path="/nonexistent/returns.csv"))


def test_unknown_model_parameter():
    with pytest.raises(ConfigError, match="model 'finite-state'"):
        run_experiment(_config(model="finite-state", model_params={"states": 3}))
    with pytest.raises(ConfigError, match="model 'conditioned-rw'"):
        run_experiment(_config(model_params={"sigma": -1.0}))


def test_estimates_need_two_samples():
    with pytest.raises(ConfigError, match="at least 2"):
        run_experiment(_config(num_samples=1))


# -- path sampling ------------------------------------------------------------

def test_zero_paths_writes_header_only():
    buffer = io.StringIO()
    rows = emit_samples(_config(), 0, buffer)
    assert rows == []
    assert buffer.getvalue() == "path_index,trials,status," + ",".join(f"x_{t}" for t in range(1, 9)) + "\n"


def test_walk_paths_stay_in_support():
    buffer = io.StringIO()
    rows = emit_samples(_config(sizes=(16,)), 25, buffer)
    lines = buffer.getvalue().splitlines()
    assert len(lines) == 26
    for line in lines[1:]:
        fields = line.split(",")
        assert fields[2] == "accepted"
        values = np.array([float(v) for v in fields[3:]])
        assert values.shape == (8,)
        assert np.all((values >= 0.0) & (values <= 1.0))
    assert mean_trials(rows) >= 1.0


def test_results_frame_keeps_numeric_columns():
    rows = run_experiment(_config(estimator="both"))
    frame = results_frame(rows)
    assert list(frame.columns) == list(RESULT_HEADER)
    assert frame["N"].tolist() == [6, 6]
    assert frame["estimator"].tolist() == ["ratio-mean", "frequency"]
    assert frame["p_ers_percent"].tolist() == [row.p_ers_percent for row in rows]


def test_sample_file_reads_back_exactly(tmp_path):
    out = tmp_path / "paths.csv"
    rows = emit_samples(_config(), 5, str(out))
    frame = pd.read_csv(out, float_precision="round_trip")
    assert list(frame.columns[:3]) == ["path_index", "trials", "status"]
    assert frame["trials"].tolist() == [row.trials for row in rows]
    np.testing.assert_array_equal(frame.filter(like="x_").to_numpy(), np.array([row.path for row in rows]))


def test_sample_output_is_identical_across_worker_counts():
    first, second = io.StringIO(), io.StringIO()
    emit_samples(_config(workers=1), 12, first)
    emit_samples(_config(workers=3), 12, second)
    assert first.getvalue() == second.getvalue()


def test_exhausted_paths_are_reported():
    buffer = io.StringIO()
    rows = emit_samples(_config(max_trials=0), 3, buffer)
    assert all(row.status == "exhausted" for row in rows)
    # state columns stay, left empty
    assert buffer.getvalue().splitlines()[1] == "0,0,exhausted" + "," * 8
    assert math.isnan(mean_trials(rows))


def test_sampling_needs_a_single_cell():
    with pytest.raises(ConfigError, match="single"):
        emit_samples(_config(sizes=(4, 8)), 1, io.StringIO())


@pytest.mark.slow
def test_emitted_marginals_match_oracle(chisquare_pvalue):
    config = ExperimentConfig(model="finite-state", horizons=(10,), sizes=(20,),
                              model_params={"table_seed": 3}, workers=4, record_wall_time=False)
    rows = emit_samples(config, 10_000, io.StringIO())
    oracle = grid_oracle(finite_state_model(random_finite_state_spec(4, 10, seed=3)))
    paths = np.array([row.path for row in rows])
    for t in range(10):
        counts = np.bincount(paths[:, t].astype(int), minlength=4)
        assert chisquare_pvalue(counts, oracle.marginals[t] * len(rows)) > 1e-3


# -- entrypoint ----------------------------------------------------------------

def test_cli_run_writes_table(tmp_path, capsys):
    out = tmp_path / "table.csv"
    status = app.main(["run", "--model", "conditioned-rw", "--t", "6", "--n", "4", "8",
                       "--samples", "20", "--no-wall-time", "--out", str(out)])
    assert status == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(RESULT_HEADER)
    assert [line.split(",")[2] for line in lines[1:]] == ["4", "8"]
    assert "Wrote 2 row(s)" in capsys.readouterr().out


def test_cli_sample_to_stdout(capsys):
    status = app.main(["sample", "--model", "two-point", "--n", "3", "--count", "4", "--seed", "2"])
    assert status == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "path_index,trials,status,x_1"
    assert len(lines) == 5


def test_cli_model_params(tmp_path):
    out = tmp_path / "table.csv"
    status = app.main(["run", "--model", "finite-state", "--param", "state_count=3", "--t", "4",
                       "--n", "3", "--samples", "10", "--out", str(out)])
    assert status == 0


def test_cli_reports_library_errors(capsys):
    status = app.main(["run", "--model", "nonlinear-ar", "--data", "/nonexistent.csv"])
    assert status == 2
    assert "Error: data file not found" in capsys.readouterr().err


def test_cli_rejects_desk_scale_overrun(capsys):
    status = app.main(["run", "--model", "conditioned-rw", "--t", "500", "--n", "2000"])
    assert status == 2
    assert "--extended" in capsys.readouterr().err


def test_bundled_table_config_is_desk_scale():
    from pathlib import Path

    config = load_config(Path(__file__).parent / "experiments" / "table1.yaml", environ={})
    runner = create_experiment_runner(config)
    assert list(runner.cells()) == [(100, 100), (100, 200), (100, 500)]


def test_bundled_extended_configs():
    from pathlib import Path

    experiments = Path(__file__).parent / "experiments"
    table = create_experiment_runner(load_config(experiments / "table1_extended.yaml", environ={}))
    assert list(table.cells()) == [(250, 250), (250, 500), (250, 1250), (500, 500), (500, 1000), (500, 2500)]
    nonlinear = create_experiment_runner(load_config(experiments / "nonlinear_ar.yaml", environ={}))
    assert list(nonlinear.cells()) == [(500, 500), (500, 1000), (500, 2000)]
