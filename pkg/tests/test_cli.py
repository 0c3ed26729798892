import csv
import json
import shutil
from pathlib import Path

import pytest

import cli
import tissf_api
from tissf.schemas import CONFIG_MODELS


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def _tune_config(tmp_path, **overrides):
    payload = {"schema_version": 1, "plant": "example1", "sampling": {"method": "grid", "size": 11}}
    payload.update(overrides)
    return _write(tmp_path / "tune.json", payload)


def _scenario(name, controller, **overrides):
    scenario = {"name": name, "plant": "example1", "controller": controller, "t_end": 0.2, "dt": 0.01}
    scenario.update(overrides)
    return scenario


class TestTune:
    def test_writes_tuning_result(self, tmp_path, capsys):
        config = _tune_config(tmp_path)
        assert cli.main(["tune", "--config", str(config), "--out", str(tmp_path / "out")]) == cli.EXIT_OK
        payload = json.loads((tmp_path / "out" / "tuning_result.json").read_text())
        assert payload["status"] == "optimal"
        assert payload["metadata"]["command"] == "tune"
        assert payload["params"]["lambda"] >= payload["params"]["lambda_min"]
        assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == payload["params"]

    def test_seed_flag_is_recorded(self, tmp_path):
        config = _tune_config(tmp_path)
        cli.main(["tune", "--config", str(config), "--out", str(tmp_path), "--seed", "9"])
        assert json.loads((tmp_path / "tuning_result.json").read_text())["metadata"]["seed"] == 9

    def test_missing_config(self, tmp_path):
        assert cli.main(["tune", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG

    def test_unknown_key_is_rejected(self, tmp_path):
        config = _tune_config(tmp_path, samplng={"size": 3})
        assert cli.main(["tune", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_unknown_plant(self, tmp_path):
        config = _tune_config(tmp_path, plant="pendulum")
        assert cli.main(["tune", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_empty_safe_set(self, tmp_path):
        config = _tune_config(tmp_path, domain={"lo": [-5.0, 0.0], "hi": [-1.0, 5.0]})
        assert cli.main(["tune", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_EMPTY_SAMPLES

    def test_negative_rho(self, tmp_path):
        config = _tune_config(tmp_path, rho=-1.0)
        assert cli.main(["tune", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_unbounded_lp(self, tmp_path):
        config = _tune_config(tmp_path, domain={"lo": [1.0, -5.0], "hi": [5.0, -1.0]}, rho=0.0,
                              lipschitz={"L_h": 0.0, "L_eta": 0.0})
        assert cli.main(["tune", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_TUNING
        payload = json.loads((tmp_path / "tuning_result.json").read_text())
        assert payload["status"] == "unbounded"
        assert payload["params"] is None


class TestSimulate:
    def test_batch_writes_one_directory_per_scenario(self, tmp_path):
        config = _write(tmp_path / "sim.json", {"schema_version": 1, "scenarios": [
            _scenario("nominal", {"kind": "nominal_only"}, record_every=5),
            _scenario("filtered", {"kind": "lp_qp_filter", "params": {"eps0": 0.1, "lambda": 0.01}}),
        ]})
        out = tmp_path / "runs"
        assert cli.main(["simulate", "--config", str(config), "--out", str(out)]) == cli.EXIT_OK

        with (out / "nominal" / "trajectory.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:4] == ["t", "x1", "x2", "u1"]
        assert len(rows) == 1 + 5
        summary = json.loads((out / "filtered" / "summary.json").read_text())
        assert summary["status"] == "ok"
        assert summary["controller"]["kind"] == "lp_qp_filter"
        assert summary["summary"]["input_violations"] == 0

    def test_failure_still_runs_the_rest(self, tmp_path):
        config = _write(tmp_path / "sim.json", {"schema_version": 1, "scenarios": [
            _scenario("doomed", {"kind": "lp_qp_filter", "params": {"ln_eps0": -20.0, "lambda": 0.01}}),
            _scenario("fine", {"kind": "nominal_only"}),
        ]})
        out = tmp_path / "runs"
        assert cli.main(["simulate", "--config", str(config), "--out", str(out)]) == cli.EXIT_SCENARIO
        assert json.loads((out / "doomed" / "summary.json").read_text())["status"] == "failed"
        assert json.loads((out / "fine" / "summary.json").read_text())["status"] == "ok"

    def test_tuning_result_path_is_relative_to_the_config(self, tmp_path):
        cli.main(["tune", "--config", str(_tune_config(tmp_path)), "--out", str(tmp_path / "tuned")])
        config = _write(tmp_path / "sim.json", {"schema_version": 1, "scenarios": [
            _scenario("lp", {"kind": "lp_qp_filter", "tuning_result": "tuned/tuning_result.json"}),
        ]})
        assert cli.main(["simulate", "--config", str(config), "--out", str(tmp_path / "runs")]) == cli.EXIT_OK

    def test_trial_search_records_attempts(self, tmp_path):
        config = _write(tmp_path / "sim.json", {"schema_version": 1, "scenarios": [
            _scenario("search", {"kind": "trial_search", "candidates": [[1e-9, 0.01], [1.0, 0.2]]}),
        ]})
        assert cli.main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_OK
        summary = json.loads((tmp_path / "search" / "summary.json").read_text())
        assert len(summary["attempts"]) == 2
        assert summary["controller"]["eps0"] == 1.0

    def test_zero_horizon_is_rejected(self, tmp_path):
        config = _write(tmp_path / "sim.json", {"schema_version": 1, "scenarios": [
            _scenario("instant", {"kind": "nominal_only"}, t_end=0.0),
        ]})
        assert cli.main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_seed_flag_is_recorded(self, tmp_path):
        config = _write(tmp_path / "sim.json", {"schema_version": 1, "seed": 4, "scenarios": [
            _scenario("nominal", {"kind": "nominal_only"}),
        ]})
        assert cli.main(["simulate", "--config", str(config), "--out", str(tmp_path / "a")]) == cli.EXIT_OK
        assert cli.main(["simulate", "--config", str(config), "--out", str(tmp_path / "b"),
                         "--seed", "11"]) == cli.EXIT_OK
        first = json.loads((tmp_path / "a" / "nominal" / "summary.json").read_text())
        second = json.loads((tmp_path / "b" / "nominal" / "summary.json").read_text())
        assert first["metadata"]["seed"] == 4
        assert second["metadata"]["seed"] == 11
        assert first["summary"] == second["summary"]

    def test_duplicate_names_are_rejected(self, tmp_path):
        config = _write(tmp_path / "sim.json", {"schema_version": 1, "scenarios": [
            _scenario("same", {"kind": "nominal_only"}),
            _scenario("same", {"kind": "nominal_only"}),
        ]})
        assert cli.main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


class TestVerify:
    def _config(self, tmp_path, params):
        return _write(tmp_path / "verify.json", {
            "schema_version": 1, "plant": "example1", "params": params,
            "sampling": {"method": "grid", "size": 21},
        })

    def test_good_tuning(self, tmp_path):
        config = self._config(tmp_path, {"ln_eps0": -2.0, "lambda": 0.01})
        assert cli.main(["verify", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_OK
        payload = json.loads((tmp_path / "verify.json").read_text())
        assert payload["n_violations"] == 0
        assert payload["kappa_effective"] > 0.0

    def test_empty_domain(self, tmp_path):
        config = _write(tmp_path / "verify.json", {
            "schema_version": 1, "plant": "example1", "params": {"ln_eps0": -2.0, "lambda": 0.01},
            "domain": {"lo": [-5.0, 0.0], "hi": [-1.0, 5.0]}, "sampling": {"method": "grid", "size": 11},
        })
        assert cli.main(["verify", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_EMPTY_SAMPLES

    def test_bad_tuning(self, tmp_path):
        config = self._config(tmp_path, {"ln_eps0": -10.0, "lambda": 0.01})
        assert cli.main(["verify", "--config", str(config), "--out", str(tmp_path)]) == cli.EXIT_VERIFY
        assert json.loads((tmp_path / "verify.json").read_text())["n_violations"] > 0


def test_support_prints_json_lines(tmp_path, capsys):
    config = _write(tmp_path / "support.json", {
        "schema_version": 1,
        "input_set": {"type": "box", "lo": [-6.0], "hi": [0.8]},
        "directions": [[1.0], [-1.0]],
    })
    assert cli.main(["support", "--config", str(config)]) == cli.EXIT_OK
    lines = [json.loads(line) for line in capsys.readouterr().out.strip().splitlines()]
    assert lines == [{"sigma": 0.8, "u_star": [0.8]}, {"sigma": 6.0, "u_star": [-6.0]}]


def test_support_rejects_unbounded_polyhedron(tmp_path):
    config = _write(tmp_path / "support.json", {
        "schema_version": 1,
        "input_set": {"type": "polyhedron", "A": [[1.0, 0.0]], "b": [1.0]},
        "directions": [[1.0, 0.0]],
    })
    assert cli.main(["support", "--config", str(config)]) == cli.EXIT_CONFIG


def test_schema_writes_every_model(tmp_path):
    assert cli.main(["schema", "--out", str(tmp_path)]) == cli.EXIT_OK
    for name in CONFIG_MODELS:
        schema = json.loads((tmp_path / f"{name}.schema.json").read_text())
        assert "properties" in schema


def test_report_summarizes_artifacts(tmp_path, capsys):
    cli.main(["tune", "--config", str(_tune_config(tmp_path)), "--out", str(tmp_path / "out")])
    capsys.readouterr()
    assert cli.main(["report", "--dir", str(tmp_path / "out")]) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "tuning_result.json (tune)" in text
    assert "status          optimal" in text


def test_events_reach_the_callback(tmp_path):
    events = []
    config = tissf_api.load_config(_tune_config(tmp_path), CONFIG_MODELS["tune"])
    tissf_api.run_tune(config, tmp_path, events.append)
    assert [e["type"] for e in events][0] == "tune_start"
    assert events[-1]["type"] == "tune_done"
    assert all({"timestamp", "type", "message"} <= set(e) for e in events)


@pytest.mark.parametrize("exc, code", [
    (tissf_api.ConfigError("x"), cli.EXIT_CONFIG),
    (tissf_api.ScenarioFailure("x", t=0.0, x=None), cli.EXIT_SCENARIO),
    (tissf_api.NonFiniteStateError("x", t=0.0), cli.EXIT_NON_FINITE),
])
def test_exit_code_mapping(exc, code):
    assert cli.exit_code_for(exc) == code


def test_support_of_a_ball(tmp_path, capsys):
    config = _write(tmp_path / "support.json", {
        "schema_version": 1,
        "input_set": {"type": "ball", "gamma": 15.0},
        "directions": [[3.0]],
    })
    assert cli.main(["support", "--config", str(config)]) == cli.EXIT_OK
    line = json.loads(capsys.readouterr().out.strip())
    assert line["sigma"] == pytest.approx(45.0)
    assert line["u_star"] == pytest.approx([15.0])


class TestArguments:
    def test_missing_required_option_is_a_config_error(self):
        assert cli.main(["tune"]) == cli.EXIT_CONFIG

    def test_unknown_command_is_a_config_error(self):
        assert cli.main(["calibrate"]) == cli.EXIT_CONFIG

    def test_bad_seed_is_a_config_error(self, tmp_path):
        config = _tune_config(tmp_path)
        assert cli.main(["tune", "--config", str(config), "--seed", "many"]) == cli.EXIT_CONFIG

    @pytest.mark.parametrize("argv", [
        ["tune", "--config", "x.json"],
        ["simulate", "--config", "x.json"],
        ["verify", "--config", "x.json"],
        ["support", "--config", "x.json"],
        ["report"],
        ["schema"],
    ])
    def test_log_level_after_the_command(self, argv):
        args = cli._build_parser().parse_args(argv + ["--log-level", "DEBUG"])
        assert args.log_level == "DEBUG"

    def test_log_level_before_the_command_is_kept(self):
        args = cli._build_parser().parse_args(["--log-level", "WARNING", "schema"])
        assert args.log_level == "WARNING"

    def test_log_level_defaults_to_info(self):
        assert cli._build_parser().parse_args(["schema"]).log_level == "INFO"

    def test_simulate_accepts_seed(self):
        args = cli._build_parser().parse_args(["simulate", "--config", "x.json", "--seed", "3"])
        assert args.seed == 3


REPO_ROOT = Path(cli.__file__).resolve().parent


@pytest.mark.parametrize("name", sorted(CONFIG_MODELS))
def test_shipped_schema_matches_the_model(name):
    shipped = json.loads((REPO_ROOT / "docs" / "schemas" / f"{name}.schema.json").read_text())
    generated = CONFIG_MODELS[name].model_json_schema(by_alias=True)
    assert shipped["title"] == generated["title"]
    assert set(shipped["properties"]) == set(generated["properties"])
    assert set(shipped.get("required", [])) == set(generated.get("required", []))
    assert set(shipped.get("$defs", {})) == set(generated.get("$defs", {}))


def test_quick_start_configs_share_one_run_directory(tmp_path, capsys):
    # same layout as the README: configs/ next to runs/
    configs = tmp_path / "configs"
    shutil.copytree(REPO_ROOT / "configs", configs)
    simulate = json.loads((configs / "simulate_example1.json").read_text())
    for scenario in simulate["scenarios"]:
        scenario.update(t_end=0.5, dt=0.01, record_every=1)
    _write(configs / "simulate_example1.json", simulate)
    out = tmp_path / "runs" / "example1"

    assert cli.main(["tune", "--config", str(configs / "tune_example1.json"), "--out", str(out)]) == cli.EXIT_OK
    assert cli.main(["simulate", "--config", str(configs / "simulate_example1.json"),
                     "--out", str(out)]) == cli.EXIT_OK
    verify_code = cli.main(["verify", "--config", str(configs / "verify_example1.json"), "--out", str(out)])
    assert verify_code in (cli.EXIT_OK, cli.EXIT_VERIFY)
    capsys.readouterr()
    assert cli.main(["report", "--config", str(configs / "report.json")]) == cli.EXIT_OK

    tuned = json.loads((out / "tuning_result.json").read_text())["params"]
    lp_qp = json.loads((out / "lp_qp" / "summary.json").read_text())
    verified = json.loads((out / "verify.json").read_text())
    assert lp_qp["controller"]["ln_eps0"] == tuned["ln_eps0"]
    assert verified["params"] == tuned
    assert "tuning_result.json (tune)" in capsys.readouterr().out
