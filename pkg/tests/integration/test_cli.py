"""Integration tests for the bdfl command-line interface."""

import json
import socket
import subprocess
import sys

import pandas as pd
import pytest
import yaml
from click.testing import CliRunner

from bdfl import __version__
from bdfl.cli.main import main

SMALL_CONFIG = {
    "dataset": {"source": "synthetic", "samples": 40, "features_a": 3, "features_b": 2, "test_fraction": 0.25},
    "optimizer": {"kind": "bfgs"},
    "training": {"rounds": 2, "lr0": 0.2, "decay": 0.05},
    "crypto": {"key_bits": 512, "scale_bits": 40},
    "run": {"mode": "federated", "seed": 7},
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL_CONFIG))
    return path


@pytest.fixture
def runner(monkeypatch):
    monkeypatch.setenv("BDFL_TEST_FAST", "1")
    return CliRunner()


class TestTrain:
    """Tests for `bdfl train`."""

    def test_writes_run_outputs(self, runner, config_file, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(main, ["train", "--config", str(config_file), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "metrics.csv").exists()
        assert (out / "transcript.jsonl").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["optimizer"] == "bfgs"
        assert summary["rounds_executed"] == 2
        log = (out / "run.log").read_text()
        assert "[bdfl.party.C] Round 1: Taylor loss" in log
        assert "[bdfl.party.C] Halting after round 2" in log

    def test_flags_override_file(self, runner, config_file, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(main, [
            "train", "--config", str(config_file), "--out", str(out),
            "--optimizer", "bdfl", "--alpha", "0.25", "--rounds", "3", "--mode", "oracle",
        ])
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["optimizer"] == "bdfl"
        assert summary["alpha"] == 0.25
        assert summary["rounds_executed"] == 3
        assert not (out / "transcript.jsonl").exists()

    def test_csv_dataset_flag(self, runner, config_file, toy_csv, tmp_path):
        """A CSV passed with --dataset uses the last column as the label."""
        result = runner.invoke(main, [
            "train", "--config", str(config_file), "--dataset", str(toy_csv),
            "--mode", "oracle", "--out", str(tmp_path / "run"),
        ])
        assert result.exit_code == 0, result.output

    def test_missing_dataset_file(self, runner, config_file, tmp_path):
        result = runner.invoke(main, [
            "train", "--config", str(config_file), "--dataset", str(tmp_path / "absent.csv"),
            "--out", str(tmp_path / "run"),
        ])
        assert result.exit_code == 1

    def test_malformed_yaml(self, runner, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("training: [rounds: 3\n")
        result = runner.invoke(main, ["train", "--config", str(bad)])
        assert result.exit_code == 1

    def test_invalid_value(self, runner, config_file, tmp_path):
        result = runner.invoke(main, [
            "train", "--config", str(config_file), "--lr", "-1", "--out", str(tmp_path / "run"),
        ])
        assert result.exit_code == 1


class TestCompare:
    """Tests for `bdfl compare`."""

    def test_optimizers_side_by_side(self, runner, config_file, tmp_path):
        out = tmp_path / "cmp"
        result = runner.invoke(main, [
            "compare", "--config", str(config_file), "--optimizers", "gd,bfgs",
            "--mode", "oracle", "--rounds", "4", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(out / "comparison.csv")
        assert {"round", "gd:taylor_loss", "bfgs:taylor_loss"} <= set(table.columns)
        assert len(table) == 4
        summary = json.loads((out / "comparison_summary.json").read_text())
        assert [r["label"] for r in summary["runs"]] == ["gd", "bfgs"]

    def test_single_config_copies_metrics(self, runner, config_file, tmp_path):
        out = tmp_path / "cmp"
        result = runner.invoke(main, ["compare", str(config_file), "--mode", "oracle", "--out", str(out)])
        assert result.exit_code == 0, result.output
        header = (out / "comparison.csv").read_text().splitlines()[0]
        assert header.startswith("round,taylor_loss,exact_loss")

    def test_nothing_to_compare(self, runner):
        assert runner.invoke(main, ["compare"]).exit_code == 1

    def test_unknown_optimizer(self, runner, config_file):
        result = runner.invoke(main, ["compare", "--config", str(config_file), "--optimizers", "adam"])
        assert result.exit_code == 1


class TestTable1:
    """Tests for `bdfl table1` on stand-in configs."""

    def test_grid_written(self, runner, tmp_path):
        config_dir = tmp_path / "configs"
        config_dir.mkdir()
        for name in ("credit_card", "breast_cancer"):
            cfg = dict(SMALL_CONFIG, dataset=dict(SMALL_CONFIG["dataset"], name=name))
            (config_dir / f"{name}.yaml").write_text(yaml.safe_dump(cfg))
        out = tmp_path / "table"
        result = runner.invoke(main, [
            "table1", "--config-dir", str(config_dir), "--mode", "oracle", "--rounds", "3", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(out / "table1.csv")
        assert len(table) == 8
        missing = table[(table["method"] == "BDFL") & (table["dataset"] == "credit_card")]
        assert missing["measured"].isna().all()
        assert (out / "table1.txt").exists()

    def test_missing_dataset_config(self, runner, tmp_path):
        result = runner.invoke(main, ["table1", "--config-dir", str(tmp_path), "--out", str(tmp_path / "t")])
        assert result.exit_code == 1


class TestKeygen:
    """Tests for `bdfl keygen`."""

    def test_key_files(self, runner, tmp_path):
        out = tmp_path / "keys"
        result = runner.invoke(main, ["keygen", "--key-bits", "512", "--seed", "3", "--out", str(out)])
        assert result.exit_code == 0, result.output
        public = json.loads((out / "public_key.json").read_text())
        private = json.loads((out / "private_key.json").read_text())
        assert public["key_bits"] == 512
        assert private["public_key"] == public
        assert "lambda" in private and "lambda" not in public

    def test_unsupported_size(self, runner, tmp_path):
        result = runner.invoke(main, ["keygen", "--key-bits", "1000", "--out", str(tmp_path / "k")])
        assert result.exit_code == 1


class TestModuleEntryPoint:
    """`python -m bdfl` as a subprocess."""

    def test_version(self):
        result = subprocess.run(
            [sys.executable, "-m", "bdfl", "--version"], capture_output=True, text=True, timeout=60,
        )
        assert result.returncode == 0, result.stderr
        assert __version__ in result.stdout

    def test_train_in_oracle_mode(self, config_file, tmp_path):
        out = tmp_path / "sub"
        result = subprocess.run(
            [sys.executable, "-m", "bdfl", "train", "--config", str(config_file),
             "--mode", "oracle", "--out", str(out)],
            capture_output=True, text=True, timeout=120,
        )
        assert result.returncode == 0, f"CLI failed with stderr:\n{result.stderr}"
        assert (out / "metrics.csv").exists()


def _free_ports(count):
    listeners = [socket.create_server(("127.0.0.1", 0)) for _ in range(count)]
    ports = [s.getsockname()[1] for s in listeners]
    for s in listeners:
        s.close()
    return ports


class TestParty:
    """`bdfl party`: one process per role, meeting at the configured peer addresses."""

    @pytest.fixture
    def peer_config(self, tmp_path):
        ports = _free_ports(3)
        cfg = dict(SMALL_CONFIG, training=dict(SMALL_CONFIG["training"], rounds=3))
        cfg["transport"] = {
            "peers": {key: f"127.0.0.1:{port}" for key, port in zip(("host_a", "guest_b", "arbiter_c"), ports)},
            "connect_timeout_s": 60,
        }
        path = tmp_path / "peers.yaml"
        path.write_text(yaml.safe_dump(cfg))
        return path

    def test_three_processes_match_in_process_run(self, runner, peer_config, tmp_path):
        keys = tmp_path / "keys"
        assert runner.invoke(main, ["keygen", "--key-bits", "512", "--seed", "7", "--out", str(keys)]).exit_code == 0

        procs = {}
        for role in ("C", "B", "A"):
            cmd = [sys.executable, "-m", "bdfl", "party", "--role", role,
                   "--config", str(peer_config), "--out", str(tmp_path / f"party-{role}")]
            if role == "C":
                cmd += ["--key-dir", str(keys)]
            procs[role] = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        for role, proc in procs.items():
            _, stderr = proc.communicate(timeout=300)
            assert proc.returncode == 0, f"party {role} failed:\n{stderr}"

        in_process = tmp_path / "in-process"
        result = runner.invoke(main, ["train", "--config", str(peer_config), "--out", str(in_process)])
        assert result.exit_code == 0, result.output

        merged = sorted(
            line
            for role in ("A", "B", "C")
            for line in (tmp_path / f"party-{role}" / "transcript.jsonl").read_text().splitlines()
        )
        assert merged == sorted((in_process / "transcript.jsonl").read_text().splitlines())

        summary = json.loads((in_process / "summary.json").read_text())
        host = json.loads((tmp_path / "party-A" / "party.json").read_text())
        guest = json.loads((tmp_path / "party-B" / "party.json").read_text())
        arbiter = json.loads((tmp_path / "party-C" / "party.json").read_text())
        assert host["weights"] == summary["weights_a"]
        assert guest["weights"] == summary["weights_b"]
        assert arbiter["weights"] is None
        assert arbiter["taylor_losses"][-1] == summary["final_taylor_loss"]
        assert {host["halt_reason"], guest["halt_reason"], arbiter["halt_reason"]} == {"round budget reached"}
        assert (tmp_path / "party-C" / "party-C.log").exists()

    def test_missing_peer_addresses(self, runner, config_file, tmp_path):
        result = runner.invoke(main, ["party", "--role", "A", "--config", str(config_file),
                                      "--out", str(tmp_path / "a")])
        assert result.exit_code == 1
        assert "transport.peers" in result.output
