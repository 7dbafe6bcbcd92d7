import csv
import json
from concurrent.futures import ThreadPoolExecutor

import allure
import pytest
import yaml

from common.logger import Logger
from config.config import Config
from lab.cli_harness import (EXIT_CONFIG, EXIT_FAILED, EXIT_INFEASIBLE, EXIT_OK, RunConfig, canonical_json, execute,
                             main, report_body, write_report)
from lab.exceptions import ConfigError

REPLAY = {"scheme": "identity", "adversary": "replay"}


@allure.feature("命令行")
class TestRunConfig:
    def test_seed_is_an_alias(self):
        assert RunConfig.from_dict({"seed": 9}).master_seed == 9
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"seed": 9, "master_seed": 9})

    def test_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown config keys: colour"):
            RunConfig.from_dict({"colour": "red"})

    def test_validation_canonicalises_ids_and_defaults(self):
        config = RunConfig.from_dict({"game": "css", "scheme": "leaky_lsb", "adversary": "lsb", "n": "50"}).validate()
        assert (config.scheme, config.adversary, config.sampler) == ("leaky_lsb_scheme", "lsb_extractor",
                                                                     "uniform_sampler")
        assert config.n == 50
        assert config.delta == Config.setting("default_delta")
        assert config.trials() == 50

    def test_trials_from_epsilon(self):
        config = RunConfig.from_dict({**REPLAY, "epsilon": 0.02, "delta": 0.01}).validate()
        assert config.trials() == 6623

    def test_reduce_sets_the_game_from_the_direction(self):
        config = RunConfig.from_dict({"verb": "reduce", "direction": "css_from_ind", "exact": True, **REPLAY})
        config.validate()
        assert (config.game, config.sampler) == ("ind", "uniform_sampler")

    @pytest.mark.parametrize("experiment", [
        {"adversary": "replay", "exact": True},
        {**REPLAY, "n": 10, "epsilon": 0.1},
        {**REPLAY},
        {**REPLAY, "exact": True, "n": 10},
        {"verb": "sweep", **REPLAY, "exact": True, "k_list": [4]},
        {"verb": "sweep", **REPLAY, "n": 10},
        {**REPLAY, "exact": True, "direction": "css_from_ind"},
        {"verb": "reduce", **REPLAY, "exact": True},
        {"game": "css_split", "scheme": "leaky_lsb", "adversary": "constant", "exact": True},
        {**REPLAY, "exact": True, "sampler": "uniform"},
        {**REPLAY, "exact": True, "k": "four"},
        {**REPLAY, "n": 10, "delta": "tiny"},
        {**REPLAY, "n": 10, "delta": 1.5},
        {**REPLAY, "exact": True, "seed": -1},
        {**REPLAY, "exact": True, "format": "xml"},
        {"verb": "matrix"},
        {"verb": "shout"},
    ])
    def test_invalid_configs_exit_with_config_error(self, experiment):
        exit_code, report = execute({"verb": "run", **experiment})
        assert exit_code == EXIT_CONFIG
        assert report["status"] == "config_error"
        assert report["error"]["type"] in ("ConfigError", "UnknownCorpusId")


@allure.feature("命令行")
class TestExecute:
    def test_exact_run(self, run_cli):
        exit_code, report = run_cli(**REPLAY, exact=True)
        assert exit_code == EXIT_OK
        assert report["result"]["adv"] == "1/1"
        assert report["spec"]["coin_layout"]["phase2"] == 1
        assert report["transcript_digest"] is None

    def test_infeasible_enumeration(self, run_cli):
        exit_code, report = run_cli(game="css", scheme="leaky_lsb", adversary="lsb", k=8, exact=True)
        assert exit_code == EXIT_INFEASIBLE
        assert report["error"]["witness"]["required_bits"] == 30

    def test_estimates_are_reproducible(self, run_cli):
        experiment = dict(scheme="xor_malleable", adversary="bitflip", atk="cca2", n=40, seed=5)
        first = run_cli(**experiment)[1]
        second = run_cli(**experiment)[1]
        assert canonical_json(report_body(first)) == canonical_json(report_body(second))
        assert first["transcript_digest"]["records"] == 80

    def test_different_seeds_change_the_digest(self, run_cli):
        first = run_cli(**REPLAY, n=20, seed=1)[1]
        second = run_cli(**REPLAY, n=20, seed=2)[1]
        assert first["transcript_digest"]["hexdigest"] != second["transcript_digest"]["hexdigest"]

    def test_nested_selftest_is_rejected(self):
        exit_code, report = execute({"verb": "selftest"}, nested=True)
        assert exit_code == EXIT_CONFIG

    def test_report_body_drops_timings_everywhere(self):
        body = report_body({"wall_clock_seconds": 1, "matrix": {"cells": [{"wall_clock_seconds": 2, "x": 1}]}})
        assert body == {"matrix": {"cells": [{"x": 1}]}}


@allure.feature("命令行")
class TestRerun:
    def test_saved_report_replays_identically(self, tmp_path, run_cli):
        _, report = run_cli(scheme="cca1_key_leak", adversary="cca1_table", atk="cca1", n=30, seed=3)
        path = tmp_path / "report.json"
        write_report(report, str(path))
        exit_code, replay = execute({"verb": "rerun", "report": str(path)})
        assert exit_code == EXIT_OK
        assert replay["rerun"]["matches"] is True
        assert replay["result"] == report["result"]

    def test_tampered_report_is_flagged(self, tmp_path, run_cli):
        _, report = run_cli(**REPLAY, exact=True)
        report["result"]["adv"] = "0/1"
        path = tmp_path / "report.json"
        write_report(report, str(path))
        exit_code, replay = execute({"verb": "rerun", "report": str(path)})
        assert exit_code == EXIT_FAILED
        assert replay["rerun"]["matches"] is False
        assert replay["status"] == "failed"

    def test_missing_report(self, tmp_path):
        exit_code, _ = execute({"verb": "rerun", "report": str(tmp_path / "absent.json")})
        assert exit_code == EXIT_CONFIG


@allure.feature("命令行")
class TestMain:
    def test_run_writes_the_report(self, tmp_path, capsys):
        path = tmp_path / "out" / "run.json"
        code = main(["run", "--scheme", "identity", "--adversary", "replay", "--exact", "--output", str(path)])
        assert code == EXIT_OK
        saved = json.loads(path.read_text(encoding="utf-8"))
        printed = json.loads(capsys.readouterr().out)
        assert saved == printed
        assert saved["config"]["exact"] is True

    def test_yaml_output(self, capsys):
        code = main(["reduce", "--direction", "ind_from_css", "--scheme", "leaky_lsb", "--adversary", "lsb",
                     "--exact", "--format", "yaml"])
        assert code == EXIT_OK
        report = yaml.safe_load(capsys.readouterr().out)
        assert report["reduction"]["check"]["verdict"] == "PASS"

    def test_yaml_report_file_and_tie_break_alias(self, tmp_path, capsys):
        path = tmp_path / "out" / "report.yaml"
        code = main(["reduce", "--direction", "ind_from_css", "--scheme", "leaky_lsb", "--adversary", "constant",
                     "--exact", "--tie-break", "PaperPseudocode", "--format", "yaml", "--output", str(path)])
        assert code == EXIT_OK
        saved = yaml.safe_load(path.read_text(encoding="utf-8"))
        assert saved == yaml.safe_load(capsys.readouterr().out)
        assert saved["config"]["tie_break"] == "last_match"
        assert saved["reduction"]["constructed"]["p1"] == "1/1"

    @pytest.mark.parametrize("argv", [["bogus"], ["run", "--k", "four"], ["reduce", "--scheme", "identity"]])
    def test_bad_arguments(self, argv, capsys):
        assert main(argv) == EXIT_CONFIG

    def test_unknown_profile(self, lab_profile, capsys):
        assert main(["list", "--profile", "nightly"]) == EXIT_CONFIG

    def test_profile_switch(self, lab_profile, capsys):
        assert main(["list", "--profile", "quick"]) == EXIT_OK
        assert Config.profile_name() == "quick"
        report = json.loads(capsys.readouterr().out)
        assert len(report["corpus"]["documented"]) == 13

    def test_matrix_summary_csv(self, tmp_path, capsys):
        target = tmp_path / "summary.csv"
        code = main(["matrix", "data/matrices/grid.yaml", "--csv", str(target)])
        assert code == EXIT_OK
        with open(target, encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert [row["adversary"] for row in rows] == ["replay_distinguisher", "coinflip_adversary", "lsb_extractor"]
        assert rows[2]["adv"] == "1/2"
        assert rows[2]["game"] == "css"


@allure.feature("命令行")
class TestLogger:
    def test_worker_threads_share_one_logger(self):
        with ThreadPoolExecutor(max_workers=8) as pool:
            loggers = list(pool.map(lambda _: Logger(), range(32)))
        assert all(logger is loggers[0] for logger in loggers)
        assert len(loggers[0].logger.handlers) == 2
