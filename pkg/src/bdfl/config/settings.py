"""Configuration system with Pydantic validation."""

import os
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from bdfl.crypto.paillier import SUPPORTED_KEY_BITS
from bdfl.models.training import OptimizerKind, StepSchedule

FAST_KEY_BITS = 512
FAST_ENV_VAR = "BDFL_TEST_FAST"
ROLE_KEYS = ("host_a", "guest_b", "arbiter_c")


def parse_address(address: str) -> tuple[str, int]:
    """Split "host:port" into (host, port)."""
    host, sep, port = address.rpartition(":")
    if not sep or not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise ValueError(f"expected 'host:port', got {address!r}")
    return host, int(port)


class RunMode(str, Enum):
    FEDERATED = "federated"
    FEDERATED_SOCKETS = "federated-sockets"
    ORACLE = "oracle"
    ORACLE_EXACT = "oracle-exact"


class SchedulerKind(str, Enum):
    SEQUENTIAL = "sequential"
    THREADED = "threaded"


class DatasetSource(str, Enum):
    CSV = "csv"
    SYNTHETIC = "synthetic"


class DatasetConfig(BaseModel):
    """Where the rows come from and how columns are routed to the parties."""

    name: str = "synthetic"
    source: DatasetSource = DatasetSource.SYNTHETIC

    # CSV source
    path: Optional[str] = None
    has_header: bool = True
    label_column: Union[int, str] = -1
    label_mapping: dict[str, int] = {"0": -1, "1": 1}
    drop_columns: list[Union[int, str]] = []
    party_a_columns: Optional[list[int]] = None   # indices after label/drop removal
    party_a_count: Optional[int] = None           # "first k features go to A"
    subsample: Optional[int] = Field(default=None, gt=0)

    # Synthetic source
    samples: int = Field(default=200, ge=0)
    features_a: int = Field(default=4, ge=0)
    features_b: int = Field(default=3, ge=0)
    separation: float = Field(default=3.0, ge=0, allow_inf_nan=False)

    test_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
    standardize: bool = True
    shuffle: bool = True

    @field_validator("label_mapping", mode="before")
    @classmethod
    def _stringify_label_keys(cls, v):
        # YAML reads `0: -1` with an int key; raw label cells are matched as text.
        if isinstance(v, dict):
            return {str(k): t for k, t in v.items()}
        return v

    @field_validator("label_mapping")
    @classmethod
    def _labels_are_signs(cls, v: dict[str, int]) -> dict[str, int]:
        bad = {k: t for k, t in v.items() if t not in (-1, 1)}
        if bad:
            raise ValueError(f"label_mapping targets must be -1 or +1, got {bad}")
        return v

    @model_validator(mode="after")
    def _csv_needs_path(self) -> "DatasetConfig":
        if self.source == DatasetSource.CSV and not self.path:
            raise ValueError("dataset.path is required when dataset.source is 'csv'")
        if self.party_a_columns is not None and self.party_a_count is not None:
            raise ValueError("set only one of party_a_columns / party_a_count")
        return self


class OptimizerConfig(BaseModel):
    """Update rule; alpha only matters for BDFL."""

    kind: OptimizerKind = OptimizerKind.BDFL
    alpha: float = Field(default=0.5, allow_inf_nan=False)
    curvature_eps: float = Field(default=1e-10, ge=0, allow_inf_nan=False)


class TrainingConfig(BaseModel):
    """Round budget, step schedule and stopping rule."""

    rounds: int = Field(default=100, gt=0)
    lr0: float = Field(default=0.1, gt=0, allow_inf_nan=False)
    decay: float = Field(default=0.05, ge=0, allow_inf_nan=False)
    tol: float = Field(default=1e-6, gt=0)    # inf is allowed: stop after two rounds
    batch_size: Optional[int] = Field(default=None, gt=0)

    @property
    def schedule(self) -> StepSchedule:
        return StepSchedule(lr0=self.lr0, decay=self.decay)


class CryptoConfig(BaseModel):
    """Paillier key size and fixed-point precision."""

    key_bits: int = 2048
    scale_bits: int = Field(default=40, gt=0, le=256)

    @field_validator("key_bits")
    @classmethod
    def _supported_key_bits(cls, v: int) -> int:
        if v not in SUPPORTED_KEY_BITS:
            raise ValueError(f"key_bits must be one of {SUPPORTED_KEY_BITS}, got {v}")
        return v


class ExecutionConfig(BaseModel):
    """How and where a run executes."""

    mode: RunMode = RunMode.FEDERATED
    scheduler: SchedulerKind = SchedulerKind.SEQUENTIAL
    seed: int = Field(default=42, ge=0, lt=2**64)
    output_dir: str = "./output"


class TransportConfig(BaseModel):
    """Socket transport settings.

    `ports` binds the three listeners of a single-process socket run (0 picks
    an ephemeral port). `peers` holds every role's "host:port" rendezvous
    address for one-party-per-process runs; `host` is the local bind address.
    """

    host: str = "127.0.0.1"
    ports: dict[str, int] = {"host_a": 0, "guest_b": 0, "arbiter_c": 0}
    peers: dict[str, str] = {}
    connect_timeout_s: float = Field(default=60.0, gt=0)
    # Receive deadline per message. None waits until the peer's connection drops.
    timeout_s: Optional[float] = Field(default=None, gt=0)

    @field_validator("ports", "peers")
    @classmethod
    def _known_roles(cls, v: dict) -> dict:
        unknown = set(v) - set(ROLE_KEYS)
        if unknown:
            raise ValueError(f"unknown party keys {sorted(unknown)}; expected {list(ROLE_KEYS)}")
        return v

    @field_validator("peers")
    @classmethod
    def _peer_addresses(cls, v: dict[str, str]) -> dict[str, str]:
        for address in v.values():
            parse_address(address)
        return v

    def peer_address(self, key: str) -> tuple[str, int]:
        if key not in self.peers:
            raise ValueError(f"transport.peers has no address for {key}")
        return parse_address(self.peers[key])


class RunConfig(BaseModel):
    """Top-level configuration of one experiment run."""

    dataset: DatasetConfig = DatasetConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    training: TrainingConfig = TrainingConfig()
    crypto: CryptoConfig = CryptoConfig()
    run: ExecutionConfig = ExecutionConfig()
    transport: TransportConfig = TransportConfig()

    def label(self) -> str:
        """Short human label, e.g. 'bdfl(0.5)' or 'bfgs'."""
        kind = self.optimizer.kind
        if kind is OptimizerKind.BDFL:
            return f"bdfl({self.optimizer.alpha:g})"
        return kind.value


def apply_fast_mode(cfg: RunConfig) -> RunConfig:
    """Drop to 512-bit keys when BDFL_TEST_FAST=1 is set."""
    if os.environ.get(FAST_ENV_VAR, "") == "1":
        cfg.crypto.key_bits = FAST_KEY_BITS
    return cfg


def load_config(path: str = "config/default.yaml") -> RunConfig:
    """Load config from YAML, falling back to defaults for missing fields."""
    config_path = Path(path)
    if config_path.exists():
        with open(config_path) as f:
            data = yaml.safe_load(f) or {}
        return RunConfig(**data)
    return RunConfig()
