"""Data models for the BDFL engine."""

from bdfl.models.dataset import RawTable, SplitSpec, VerticalDataset
from bdfl.models.protocol import Message, MessageKind, PartyRole
from bdfl.models.training import (
    METRICS_COLUMNS,
    MetricsRecord,
    OptimizerKind,
    RunSummary,
    StepSchedule,
)

__all__ = [
    "METRICS_COLUMNS",
    "Message",
    "MessageKind",
    "MetricsRecord",
    "OptimizerKind",
    "PartyRole",
    "RawTable",
    "RunSummary",
    "SplitSpec",
    "StepSchedule",
    "VerticalDataset",
]
