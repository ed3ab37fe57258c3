"""Append-only record of every protocol message."""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from bdfl.models.protocol import Message, MessageKind, PartyRole

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TranscriptRecord:
    round: int
    sender: PartyRole
    recipient: PartyRole
    kind: MessageKind
    owner: Optional[PartyRole]
    bytes: int
    payload_digest: str
    order_key: tuple[int, int]
    timestamp: float

    def to_json(self) -> dict:
        """File form; timestamps stay in memory so files are byte-stable."""
        return {
            "round": self.round,
            "from": self.sender.value,
            "to": self.recipient.value,
            "kind": self.kind.value,
            "bytes": self.bytes,
            "payload_digest": self.payload_digest,
        }


class Transcript:
    """Thread-safe message log.

    Records are kept in arrival order; `records()` returns them in protocol
    order (round, then position within the round), which is the same for a
    sequential and a threaded run of one configuration.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._records: list[TranscriptRecord] = []

    def append(self, message: Message) -> TranscriptRecord:
        record = TranscriptRecord(
            round=message.round,
            sender=message.sender,
            recipient=message.recipient,
            kind=message.kind,
            owner=message.owner,
            bytes=message.size_bytes,
            payload_digest=message.payload_digest,
            order_key=message.order_key,
            timestamp=time.time(),
        )
        with self._lock:
            self._records.append(record)
        logger.debug(
            "%s %s->%s round %d (%d bytes)",
            message.kind.value, message.sender.value, message.recipient.value,
            message.round, record.bytes,
        )
        return record

    def records(self) -> list[TranscriptRecord]:
        with self._lock:
            snapshot = list(self._records)
        return sorted(snapshot, key=lambda r: r.order_key)

    def data_records(self, round: int) -> list[TranscriptRecord]:
        return [r for r in self.records() if r.round == round and r.kind.is_data]

    def bytes_for_round(self, round: int) -> int:
        return sum(r.bytes for r in self.records() if r.round == round)

    @property
    def total_bytes(self) -> int:
        return sum(r.bytes for r in self.records())

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
            for r in self.records()
        )

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl())
        logger.info("Wrote transcript (%d messages): %s", len(self), path)
        return path
