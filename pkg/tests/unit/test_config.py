"""Unit tests for configuration loading and validation."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from bdfl.config.settings import (
    FAST_ENV_VAR,
    CryptoConfig,
    DatasetConfig,
    DatasetSource,
    OptimizerConfig,
    RunConfig,
    RunMode,
    TrainingConfig,
    TransportConfig,
    apply_fast_mode,
    load_config,
)
from bdfl.models.training import OptimizerKind

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


class TestLoadConfig:
    """Tests for YAML loading."""

    def test_default_file_is_synthetic(self):
        cfg = load_config(str(CONFIG_DIR / "default.yaml"))
        assert cfg.dataset.source is DatasetSource.SYNTHETIC
        assert cfg.run.mode is RunMode.FEDERATED
        assert cfg.optimizer.kind is OptimizerKind.BDFL

    def test_dataset_presets(self):
        breast = load_config(str(CONFIG_DIR / "breast_cancer.yaml"))
        credit = load_config(str(CONFIG_DIR / "credit_card.yaml"))
        assert breast.training.decay == pytest.approx(0.05)
        assert credit.training.decay == pytest.approx(0.06)
        assert breast.dataset.party_a_columns == list(range(10, 30))
        assert credit.dataset.party_a_count == 12
        assert breast.dataset.label_mapping == {"0": -1, "1": 1}

    def test_missing_file_gives_defaults(self, tmp_path):
        assert load_config(str(tmp_path / "none.yaml")) == RunConfig()

    def test_partial_file_keeps_other_defaults(self, tmp_path):
        path = tmp_path / "partial.yaml"
        path.write_text("training:\n  rounds: 7\n")
        cfg = load_config(str(path))
        assert cfg.training.rounds == 7
        assert cfg.training.lr0 == pytest.approx(0.1)

    def test_bad_value_raises_validation_error(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("crypto:\n  key_bits: 1000\n")
        with pytest.raises(ValidationError):
            load_config(str(path))


class TestValidation:
    """Tests for field constraints."""

    def test_label_mapping_targets_must_be_signs(self):
        with pytest.raises(ValidationError):
            DatasetConfig(label_mapping={"0": 0, "1": 1})

    def test_csv_source_needs_path(self):
        with pytest.raises(ValidationError):
            DatasetConfig(source="csv")

    def test_one_split_rule_only(self):
        with pytest.raises(ValidationError):
            DatasetConfig(source="csv", path="x.csv", party_a_columns=[0], party_a_count=1)

    def test_test_fraction_below_one(self):
        with pytest.raises(ValidationError):
            DatasetConfig(test_fraction=1.0)

    def test_non_finite_alpha_rejected(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(alpha=float("nan"))

    def test_rounds_positive(self):
        with pytest.raises(ValidationError):
            TrainingConfig(rounds=0)

    def test_scale_bits_positive(self):
        with pytest.raises(ValidationError):
            CryptoConfig(scale_bits=0)


class TestFastMode:
    """Tests for the BDFL_TEST_FAST override."""

    def test_env_var_forces_small_keys(self, monkeypatch):
        monkeypatch.setenv(FAST_ENV_VAR, "1")
        assert apply_fast_mode(RunConfig()).crypto.key_bits == 512

    def test_unset_leaves_keys_alone(self, monkeypatch):
        monkeypatch.delenv(FAST_ENV_VAR, raising=False)
        assert apply_fast_mode(RunConfig()).crypto.key_bits == 2048


class TestLabels:
    """Tests for run labels."""

    def test_bdfl_label_carries_alpha(self):
        cfg = RunConfig(optimizer=OptimizerConfig(kind="bdfl", alpha=0.25))
        assert cfg.label() == "bdfl(0.25)"

    def test_plain_label(self):
        assert RunConfig(optimizer=OptimizerConfig(kind="bfgs")).label() == "bfgs"


class TestTransport:
    """Tests for the transport block."""

    def test_receives_wait_without_deadline_by_default(self):
        assert TransportConfig().timeout_s is None

    def test_peer_address_parsed(self):
        t = TransportConfig(peers={"host_a": "10.0.0.5:47001", "arbiter_c": "localhost:47003"})
        assert t.peer_address("host_a") == ("10.0.0.5", 47001)
        assert t.peer_address("arbiter_c") == ("localhost", 47003)

    def test_missing_peer_named(self):
        with pytest.raises(ValueError, match="guest_b"):
            TransportConfig(peers={"host_a": "10.0.0.5:47001"}).peer_address("guest_b")

    @pytest.mark.parametrize("address", ["47001", "host:", ":47001", "host:port", "host:70000"])
    def test_bad_address_rejected(self, address):
        with pytest.raises(ValidationError):
            TransportConfig(peers={"host_a": address})

    def test_unknown_role_rejected(self):
        with pytest.raises(ValidationError):
            TransportConfig(peers={"host_d": "127.0.0.1:1"})
