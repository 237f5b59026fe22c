"""Tests for the command line entry point and its exit codes."""

import json
import os

import pytest

from src.harness import cli
from src.harness.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main, parse_sizes

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')
QUICK = os.path.join(CONFIG_DIR, 'quick.json')


def write_scenario(tmp_path, **system):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"system": system, "trials": 1}))
    return str(path)


class TestValidate:

    def test_valid(self, capsys):
        assert main(["validate", QUICK]) == EXIT_OK
        assert "is valid" in capsys.readouterr().out

    def test_invalid_lists_problem(self, tmp_path, capsys):
        path = write_scenario(tmp_path, n_bs=16, k_u=4, n_rf=4, tau_p=2)
        assert main(["validate", path]) == EXIT_CONFIG
        assert "tau_p" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == EXIT_CONFIG

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["validate", str(path)]) == EXIT_CONFIG

    def test_bad_trials_override(self):
        assert main(["validate", QUICK, "--trials", "0"]) == EXIT_CONFIG


class TestUsage:

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_CONFIG

    def test_missing_command(self):
        assert main([]) == EXIT_CONFIG

    def test_help(self):
        assert main(["--help"]) == EXIT_OK

    def test_parse_sizes(self):
        assert parse_sizes("32x8,64X12") == [(32, 8), (64, 12)]

    def test_bad_sizes(self):
        assert main(["bench", "--sizes", "32by8"]) == EXIT_CONFIG


class TestCommands:

    def test_bound_prints_gain(self, tmp_path, capsys):
        path = os.path.join(CONFIG_DIR, 'gain_vs_nbs.json')
        assert main(["bound", path, "--out-dir", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "10.28" in out and "7.27" in out and "13.29" in out
        assert (tmp_path / "bound.csv").exists()

    def test_run(self, tmp_path, capsys):
        assert main(["run", QUICK, "--trials", "1", "--out-dir", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "nmse.csv").exists()
        assert "metric rows" in capsys.readouterr().out

    def test_bad_threads(self, tmp_path):
        assert main(["run", QUICK, "--trials", "1", "--threads", "0",
                     "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_bench(self, tmp_path):
        assert main(["bench", "--sizes", "8x2", "--repetitions", "1", "--n-data", "50",
                     "--out-dir", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "bench.csv").exists()

    def test_runtime_failure(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise RuntimeError("worker crashed")
        monkeypatch.setattr(cli, "run_experiment", boom)
        assert main(["run", QUICK, "--out-dir", str(tmp_path)]) == EXIT_RUNTIME
        assert "worker crashed" in capsys.readouterr().err

    def test_bad_environment(self, monkeypatch):
        monkeypatch.setenv("THZSB_THREADS", "many")
        assert main(["validate", QUICK]) == EXIT_CONFIG
