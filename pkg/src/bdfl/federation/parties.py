"""Party states and the per-round operations each party performs.

Host A holds feature columns only, Guest B holds feature columns and the
labels, Arbiter C holds the key pair and no data. Everything a party sends
leaves through one of the functions below as a Message.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from bdfl.crypto.encoding import encode
from bdfl.crypto.paillier import (
    Ciphertext,
    KeyPair,
    PublicKey,
    ct_add,
    ct_add_plain,
    ct_scalar_mul,
    ct_sum,
    decrypt,
)
from bdfl.federation.codec import (
    ciphertexts_to_payload,
    encrypt_vector,
    floats_to_payload,
    payload_to_ciphertexts,
    payload_to_floats,
)
from bdfl.federation.exceptions import PrivacyViolationError, UnexpectedMessageError
from bdfl.learning.quasi_newton import CurvatureState, advance, lr_at, step, weights_converged
from bdfl.learning.taylor import LOG2, compute_u
from bdfl.models.protocol import Message, MessageKind, PartyRole
from bdfl.models.training import OptimizerKind, StepSchedule
from bdfl.utils.logging import party_logger


@dataclass
class PartyState:
    """State of a data party (A or B). Only B may carry labels."""

    role: PartyRole
    X: np.ndarray
    w: np.ndarray
    curvature: CurvatureState
    rng: random.Random
    y: Optional[np.ndarray] = None
    public_key: Optional[PublicKey] = None
    round: int = 0
    prev_w: Optional[np.ndarray] = None
    converged: bool = False
    weight_history: list[np.ndarray] = field(default_factory=list)
    skip_history: list[bool] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.role is PartyRole.ARBITER_C:
            raise PrivacyViolationError("feature columns or weights", self.role.value)
        if self.role is PartyRole.HOST_A and self.y is not None:
            raise PrivacyViolationError("the label vector", self.role.value)
        if self.role is PartyRole.GUEST_B and self.y is None:
            raise ValueError("Guest B needs the label vector")
        if self.w.shape != (self.X.shape[1],):
            raise ValueError(f"weight length {self.w.shape} does not match {self.X.shape[1]} columns")

    @classmethod
    def initial(
        cls, role: PartyRole, X: np.ndarray, rng: random.Random, y: Optional[np.ndarray] = None
    ) -> PartyState:
        n = X.shape[1]
        return cls(role=role, X=X, w=np.zeros(n), curvature=CurvatureState.initial(n), rng=rng, y=y)

    def require_key(self) -> PublicKey:
        if self.public_key is None:
            raise UnexpectedMessageError("PubKey before round data", "round data", party=self.role.value)
        return self.public_key


@dataclass
class ArbiterState:
    """State of Arbiter C: the key pair and what it has decrypted."""

    keypair: KeyPair
    round: int = 0
    losses: list[float] = field(default_factory=list)


def _encoded(value: float, scale_bits: int, pk: PublicKey):
    return encode(value, scale_bits, pk.n)


def _mean_of(ciphertexts: list[Ciphertext], count: int, scale_bits: int, pk: PublicKey) -> Ciphertext:
    return ct_scalar_mul(ct_sum(ciphertexts), _encoded(1.0 / count, scale_bits, pk))


def _gradient(
    enc_d: list[Ciphertext], X: np.ndarray, scale_bits: int, pk: PublicKey
) -> list[Ciphertext]:
    """[[g_j]] = (1/batch) * sum_i [[d_i]] * x_ij for every local column j."""
    rows = len(enc_d)
    grad = []
    for j in range(X.shape[1]):
        terms = [ct_scalar_mul(enc_d[i], _encoded(X[i, j], scale_bits, pk)) for i in range(rows)]
        grad.append(_mean_of(terms, rows, scale_bits, pk))
    return grad


def publish_key(state: ArbiterState, recipient: PartyRole) -> Message:
    """C -> A/B: the public half of the key pair (round 0)."""
    return Message(
        round=0,
        sender=PartyRole.ARBITER_C,
        recipient=recipient,
        kind=MessageKind.PUB_KEY,
        payload=state.keypair.public_key.to_dict(),
    )


def accept_key(state: PartyState, msg: Message) -> PartyState:
    if msg.kind is not MessageKind.PUB_KEY:
        raise UnexpectedMessageError("PubKey", msg.kind.value, msg.round, state.role.value)
    state.public_key = PublicKey.from_dict(msg.payload)
    return state


def round_host_a(state: PartyState, rows: np.ndarray, round: int, scale_bits: int) -> Message:
    """A -> B: [[u_A]] and [[u_A^2]] over the round's rows."""
    pk = state.require_key()
    u_a = compute_u(state.w, state.X[rows])
    payload = {
        "u_a": ciphertexts_to_payload(encrypt_vector(u_a, pk, scale_bits, state.rng)),
        "u_a_sq": ciphertexts_to_payload(encrypt_vector(u_a * u_a, pk, scale_bits, state.rng)),
    }
    return Message(
        round=round, sender=PartyRole.HOST_A, recipient=PartyRole.GUEST_B,
        kind=MessageKind.ENC_UA, payload=payload,
    )


def round_guest_b(
    state: PartyState, msg: Message, rows: np.ndarray, scale_bits: int
) -> tuple[Message, Message, Message]:
    """B: fold its plaintext terms into [[d]] and [[loss]], and form [[g_B]].

    Returns (EncD to A, EncLoss to C, EncGrad to C).
    """
    if msg.kind is not MessageKind.ENC_UA:
        raise UnexpectedMessageError("EncUa", msg.kind.value, msg.round, state.role.value)
    pk = state.require_key()
    enc_u_a = payload_to_ciphertexts(msg.payload["u_a"], pk)
    enc_u_a_sq = payload_to_ciphertexts(msg.payload["u_a_sq"], pk)
    X = state.X[rows]
    y = state.y[rows]
    if len(enc_u_a) != len(y):
        raise UnexpectedMessageError(f"{len(y)} encrypted u_A values", str(len(enc_u_a)), msg.round, "B")
    u_b = compute_u(state.w, X)

    quarter = _encoded(0.25, scale_bits, pk)
    eighth = _encoded(0.125, scale_bits, pk)
    enc_d = []
    loss_terms = []
    for i in range(len(y)):
        # d_i = u_A/4 + (u_B - 2y)/4
        enc_d.append(
            ct_add_plain(
                ct_scalar_mul(enc_u_a[i], quarter),
                _encoded((u_b[i] - 2.0 * y[i]) / 4.0, scale_bits, pk),
            )
        )
        # l_i = u_A (u_B/4 - y/2) + u_A^2 / 8 + (log 2 - y u_B / 2 + u_B^2 / 8)
        cross = ct_scalar_mul(enc_u_a[i], _encoded(0.25 * u_b[i] - 0.5 * y[i], scale_bits, pk))
        square = ct_scalar_mul(enc_u_a_sq[i], eighth)
        plain = LOG2 - 0.5 * y[i] * u_b[i] + 0.125 * u_b[i] * u_b[i]
        loss_terms.append(ct_add_plain(ct_add(cross, square), _encoded(plain, scale_bits, pk)))

    enc_loss = _mean_of(loss_terms, len(y), scale_bits, pk)
    enc_grad = _gradient(enc_d, X, scale_bits, pk)

    round = msg.round
    d_msg = Message(
        round=round, sender=PartyRole.GUEST_B, recipient=PartyRole.HOST_A,
        kind=MessageKind.ENC_D, payload={"d": ciphertexts_to_payload(enc_d)},
    )
    loss_msg = Message(
        round=round, sender=PartyRole.GUEST_B, recipient=PartyRole.ARBITER_C,
        kind=MessageKind.ENC_LOSS, payload={"loss": enc_loss.to_wire()},
    )
    grad_msg = Message(
        round=round, sender=PartyRole.GUEST_B, recipient=PartyRole.ARBITER_C,
        kind=MessageKind.ENC_GRAD, payload={"grad": ciphertexts_to_payload(enc_grad)},
        owner=PartyRole.GUEST_B,
    )
    return d_msg, loss_msg, grad_msg


def grad_host_a(state: PartyState, msg: Message, rows: np.ndarray, scale_bits: int) -> Message:
    """A -> C: [[g_A]] from B's [[d]] and A's own columns."""
    if msg.kind is not MessageKind.ENC_D:
        raise UnexpectedMessageError("EncD", msg.kind.value, msg.round, state.role.value)
    pk = state.require_key()
    enc_d = payload_to_ciphertexts(msg.payload["d"], pk)
    enc_grad = _gradient(enc_d, state.X[rows], scale_bits, pk)
    return Message(
        round=msg.round, sender=PartyRole.HOST_A, recipient=PartyRole.ARBITER_C,
        kind=MessageKind.ENC_GRAD, payload={"grad": ciphertexts_to_payload(enc_grad)},
        owner=PartyRole.HOST_A,
    )


def arbiter_decrypt(
    state: ArbiterState, grad_a: Message, grad_b: Message, loss: Message
) -> tuple[Message, Message, float]:
    """C: decrypt both gradient slices and the loss; route each slice to its owner."""
    for msg, owner in ((grad_a, PartyRole.HOST_A), (grad_b, PartyRole.GUEST_B)):
        if msg.kind is not MessageKind.ENC_GRAD or msg.owner is not owner:
            raise UnexpectedMessageError(f"EncGrad({owner.value})", msg.kind.value, msg.round, "C")
    if loss.kind is not MessageKind.ENC_LOSS:
        raise UnexpectedMessageError("EncLoss", loss.kind.value, loss.round, "C")

    pk = state.keypair.public_key
    round = loss.round
    replies = []
    for msg in (grad_a, grad_b):
        plain = [decrypt(state.keypair, c).decode() for c in payload_to_ciphertexts(msg.payload["grad"], pk)]
        replies.append(
            Message(
                round=round, sender=PartyRole.ARBITER_C, recipient=msg.owner,
                kind=MessageKind.PLAIN_GRAD, payload={"grad": floats_to_payload(np.asarray(plain))},
                owner=msg.owner,
            )
        )
    value = decrypt(state.keypair, Ciphertext.from_wire(loss.payload["loss"], pk)).decode()
    state.losses.append(value)
    state.round = round
    party_logger(PartyRole.ARBITER_C.value).info("Round %d: Taylor loss %.6f", round, value)
    return replies[0], replies[1], value


def update_party(
    state: PartyState,
    msg: Message,
    schedule: StepSchedule,
    kind: OptimizerKind,
    alpha: float,
    curvature_eps: float,
) -> PartyState:
    """Fold the decrypted gradient into the curvature state, then take one step."""
    if msg.kind is not MessageKind.PLAIN_GRAD or msg.owner is not state.role:
        raise UnexpectedMessageError(f"PlainGrad({state.role.value})", msg.kind.value, msg.round, state.role.value)
    g = payload_to_floats(msg.payload["grad"])
    lr = lr_at(schedule, state.round)

    state.curvature = advance(state.curvature, state.w, g, kind, alpha, curvature_eps)
    if state.curvature.skipped:
        party_logger(state.role.value).warning("Curvature update skipped in round %d", msg.round)
    state.prev_w = state.w.copy() if state.round > 0 else None
    state.w = step(state.w, g, state.curvature.C, lr, kind)
    state.round += 1
    state.weight_history.append(state.w.copy())
    state.skip_history.append(state.curvature.skipped)
    return state


def check_convergence(state: PartyState, tol: float) -> bool:
    """True iff max |w_k - w_{k-1}| < tol; never in the first round."""
    state.converged = weights_converged(state.w, state.prev_w, tol)
    return state.converged


def report_convergence(state: PartyState, round: int) -> Message:
    return Message(
        round=round, sender=state.role, recipient=PartyRole.ARBITER_C,
        kind=MessageKind.CONVERGED, payload={"converged": state.converged},
    )


def halt_decision(
    state: ArbiterState, reports: list[Message], round: int, max_rounds: int
) -> tuple[bool, str]:
    """C's verdict: stop when both data parties converged or the round budget is spent."""
    flags = {}
    for msg in reports:
        if msg.kind is not MessageKind.CONVERGED:
            raise UnexpectedMessageError("Converged", msg.kind.value, msg.round, "C")
        flags[msg.sender] = bool(msg.payload["converged"])
    if flags.get(PartyRole.HOST_A) and flags.get(PartyRole.GUEST_B):
        return True, "converged"
    if round >= max_rounds:
        return True, "round budget reached"
    return False, "continue"


def halt_message(round: int, recipient: PartyRole, stop: bool, reason: str) -> Message:
    return Message(
        round=round, sender=PartyRole.ARBITER_C, recipient=recipient,
        kind=MessageKind.HALT, payload={"stop": stop, "reason": reason},
    )
