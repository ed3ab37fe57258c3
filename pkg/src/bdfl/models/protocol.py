"""Protocol data models: party roles, message kinds and the message envelope."""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field


class PartyRole(str, Enum):
    """A holds features only, B holds features and labels, C holds the private key."""

    HOST_A = "A"
    GUEST_B = "B"
    ARBITER_C = "C"

    @property
    def config_key(self) -> str:
        """Key of this role in the transport `ports` and `peers` maps."""
        return {"A": "host_a", "B": "guest_b", "C": "arbiter_c"}[self.value]


class MessageKind(str, Enum):
    ENC_UA = "EncUa"
    ENC_D = "EncD"
    ENC_GRAD = "EncGrad"
    ENC_LOSS = "EncLoss"
    PLAIN_GRAD = "PlainGrad"
    PUB_KEY = "PubKey"
    CONVERGED = "Converged"
    HALT = "Halt"

    @property
    def is_data(self) -> bool:
        return self not in (MessageKind.PUB_KEY, MessageKind.CONVERGED, MessageKind.HALT)


# Legal (sender, recipient) pairs per kind.
ROUTES: dict[MessageKind, set[tuple[PartyRole, PartyRole]]] = {
    MessageKind.ENC_UA: {(PartyRole.HOST_A, PartyRole.GUEST_B)},
    MessageKind.ENC_D: {(PartyRole.GUEST_B, PartyRole.HOST_A)},
    MessageKind.ENC_GRAD: {
        (PartyRole.HOST_A, PartyRole.ARBITER_C),
        (PartyRole.GUEST_B, PartyRole.ARBITER_C),
    },
    MessageKind.ENC_LOSS: {(PartyRole.GUEST_B, PartyRole.ARBITER_C)},
    MessageKind.PLAIN_GRAD: {
        (PartyRole.ARBITER_C, PartyRole.HOST_A),
        (PartyRole.ARBITER_C, PartyRole.GUEST_B),
    },
    MessageKind.PUB_KEY: {
        (PartyRole.ARBITER_C, PartyRole.HOST_A),
        (PartyRole.ARBITER_C, PartyRole.GUEST_B),
    },
    MessageKind.CONVERGED: {
        (PartyRole.HOST_A, PartyRole.ARBITER_C),
        (PartyRole.GUEST_B, PartyRole.ARBITER_C),
    },
    MessageKind.HALT: {
        (PartyRole.ARBITER_C, PartyRole.HOST_A),
        (PartyRole.ARBITER_C, PartyRole.GUEST_B),
    },
}

# Position of each (kind, sender-or-owner) inside a round. Round 0 only carries PubKey.
ROUND_ORDER: list[tuple[MessageKind, PartyRole]] = [
    (MessageKind.PUB_KEY, PartyRole.HOST_A),
    (MessageKind.PUB_KEY, PartyRole.GUEST_B),
    (MessageKind.ENC_UA, PartyRole.HOST_A),
    (MessageKind.ENC_D, PartyRole.GUEST_B),
    (MessageKind.ENC_GRAD, PartyRole.HOST_A),
    (MessageKind.ENC_GRAD, PartyRole.GUEST_B),
    (MessageKind.ENC_LOSS, PartyRole.GUEST_B),
    (MessageKind.PLAIN_GRAD, PartyRole.HOST_A),
    (MessageKind.PLAIN_GRAD, PartyRole.GUEST_B),
    (MessageKind.CONVERGED, PartyRole.HOST_A),
    (MessageKind.CONVERGED, PartyRole.GUEST_B),
    (MessageKind.HALT, PartyRole.HOST_A),
    (MessageKind.HALT, PartyRole.GUEST_B),
]


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


class Message(BaseModel):
    """Immutable protocol message. Payload holds hex ciphertexts or plain reals."""

    model_config = {"frozen": True}

    round: int = Field(ge=0)
    sender: PartyRole
    recipient: PartyRole
    kind: MessageKind
    payload: dict[str, Any] = {}
    owner: Optional[PartyRole] = None   # gradient slices only

    @property
    def slot(self) -> tuple[MessageKind, PartyRole]:
        """(kind, party) key used to place the message inside its round."""
        if self.kind in (MessageKind.PUB_KEY, MessageKind.HALT):
            return self.kind, self.recipient
        return self.kind, self.owner or self.sender

    @property
    def order_key(self) -> tuple[int, int]:
        return self.round, ROUND_ORDER.index(self.slot)

    def to_wire(self) -> str:
        return canonical_json(self.model_dump(mode="json"))

    @classmethod
    def from_wire(cls, text: str) -> Message:
        return cls.model_validate_json(text)

    @property
    def size_bytes(self) -> int:
        return len(self.to_wire().encode("utf-8"))

    @property
    def payload_digest(self) -> str:
        return hashlib.sha256(canonical_json(self.payload).encode("utf-8")).hexdigest()
