"""Configuration management."""

from bdfl.config.settings import (
    FAST_ENV_VAR,
    CryptoConfig,
    DatasetConfig,
    DatasetSource,
    ExecutionConfig,
    OptimizerConfig,
    RunConfig,
    RunMode,
    SchedulerKind,
    TrainingConfig,
    TransportConfig,
    apply_fast_mode,
    load_config,
)

__all__ = [
    "FAST_ENV_VAR",
    "CryptoConfig",
    "DatasetConfig",
    "DatasetSource",
    "ExecutionConfig",
    "OptimizerConfig",
    "RunConfig",
    "RunMode",
    "SchedulerKind",
    "TrainingConfig",
    "TransportConfig",
    "apply_fast_mode",
    "load_config",
]
