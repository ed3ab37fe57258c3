"""Three-party federated training: Host A, Guest B and Arbiter C."""

from bdfl.federation.exceptions import PrivacyViolationError, ProtocolError, UnexpectedMessageError
from bdfl.federation.parties import (
    ArbiterState,
    PartyState,
    arbiter_decrypt,
    check_convergence,
    grad_host_a,
    round_guest_b,
    round_host_a,
    update_party,
)
from bdfl.federation.protocol import FederatedResult, PartyOutcome, run, run_party, setup
from bdfl.federation.transcript import Transcript, TranscriptRecord
from bdfl.federation.transport import InProcessNetwork, SocketNetwork

__all__ = [
    "ArbiterState",
    "FederatedResult",
    "InProcessNetwork",
    "PartyOutcome",
    "PartyState",
    "PrivacyViolationError",
    "ProtocolError",
    "SocketNetwork",
    "Transcript",
    "TranscriptRecord",
    "UnexpectedMessageError",
    "arbiter_decrypt",
    "check_convergence",
    "grad_host_a",
    "round_guest_b",
    "round_host_a",
    "run",
    "run_party",
    "setup",
    "update_party",
]
