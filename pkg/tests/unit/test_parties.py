"""Unit tests for party states and the per-round party operations."""

import numpy as np
import pytest

from bdfl.crypto.rng import make_rng
from bdfl.federation.exceptions import PrivacyViolationError, UnexpectedMessageError
from bdfl.federation.parties import (
    ArbiterState,
    PartyState,
    accept_key,
    arbiter_decrypt,
    grad_host_a,
    halt_decision,
    publish_key,
    report_convergence,
    round_guest_b,
    round_host_a,
    update_party,
)
from bdfl.learning.taylor import compute_d, compute_gradient_slice, compute_u, taylor_loss
from bdfl.models.protocol import MessageKind, PartyRole
from bdfl.models.training import OptimizerKind, StepSchedule

A, B, C = PartyRole.HOST_A, PartyRole.GUEST_B, PartyRole.ARBITER_C
SCALE = 40


@pytest.fixture
def parties(small_dataset, keypair):
    host = PartyState.initial(A, small_dataset.X_a, make_rng(1, "party-A"))
    guest = PartyState.initial(B, small_dataset.X_b, make_rng(1, "party-B"), y=small_dataset.y)
    arbiter = ArbiterState(keypair=keypair)
    accept_key(host, publish_key(arbiter, A))
    accept_key(guest, publish_key(arbiter, B))
    return host, guest, arbiter


def _one_round(host, guest, arbiter, rows, round=1):
    enc_ua = round_host_a(host, rows, round, SCALE)
    d_msg, loss_msg, grad_b = round_guest_b(guest, enc_ua, rows, SCALE)
    grad_a = grad_host_a(host, d_msg, rows, SCALE)
    return arbiter_decrypt(arbiter, grad_a, grad_b, loss_msg)


class TestPrivacyTyping:
    """Role rules enforced when a party state is built."""

    def test_host_cannot_hold_labels(self, small_dataset):
        with pytest.raises(PrivacyViolationError):
            PartyState.initial(A, small_dataset.X_a, make_rng(1), y=small_dataset.y)

    def test_arbiter_cannot_hold_features(self, small_dataset):
        with pytest.raises(PrivacyViolationError):
            PartyState.initial(C, small_dataset.X_a, make_rng(1))

    def test_guest_needs_labels(self, small_dataset):
        with pytest.raises(ValueError):
            PartyState.initial(B, small_dataset.X_b, make_rng(1))

    def test_arbiter_state_has_no_data_fields(self):
        fields = set(ArbiterState.__dataclass_fields__)
        assert not fields & {"X", "y", "w"}

    def test_round_data_before_key_rejected(self, small_dataset):
        host = PartyState.initial(A, small_dataset.X_a, make_rng(1))
        with pytest.raises(UnexpectedMessageError):
            round_host_a(host, np.arange(small_dataset.n_train), 1, SCALE)


class TestRoundOperations:
    """One encrypted round checked against the plaintext formulas."""

    def test_first_round_matches_plaintext(self, parties, small_dataset):
        host, guest, arbiter = parties
        rows = np.arange(small_dataset.n_train)
        host.w = np.array([0.3, -0.2, 0.1])
        guest.w = np.array([-0.4, 0.25])

        to_a, to_b, loss = _one_round(host, guest, arbiter, rows)

        u_a = compute_u(host.w, small_dataset.X_a)
        u_b = compute_u(guest.w, small_dataset.X_b)
        d = compute_d(u_a + u_b, small_dataset.y)
        assert loss == pytest.approx(taylor_loss(u_a, u_b, small_dataset.y), abs=1e-9)
        np.testing.assert_allclose(to_a.payload["grad"], compute_gradient_slice(d, small_dataset.X_a), atol=1e-9)
        np.testing.assert_allclose(to_b.payload["grad"], compute_gradient_slice(d, small_dataset.X_b), atol=1e-9)
        assert to_a.recipient is A and to_a.owner is A
        assert to_b.recipient is B and to_b.owner is B
        assert arbiter.losses == [loss]

    def test_guest_messages_are_routed(self, parties, small_dataset):
        host, guest, _ = parties
        rows = np.arange(small_dataset.n_train)
        d_msg, loss_msg, grad_msg = round_guest_b(guest, round_host_a(host, rows, 1, SCALE), rows, SCALE)
        assert (d_msg.kind, d_msg.recipient) == (MessageKind.ENC_D, A)
        assert (loss_msg.kind, loss_msg.recipient) == (MessageKind.ENC_LOSS, C)
        assert (grad_msg.kind, grad_msg.owner) == (MessageKind.ENC_GRAD, B)

    def test_arbiter_checks_gradient_owners(self, parties, small_dataset):
        host, guest, arbiter = parties
        rows = np.arange(small_dataset.n_train)
        d_msg, loss_msg, grad_b = round_guest_b(guest, round_host_a(host, rows, 1, SCALE), rows, SCALE)
        grad_a = grad_host_a(host, d_msg, rows, SCALE)
        with pytest.raises(UnexpectedMessageError):
            arbiter_decrypt(arbiter, grad_b, grad_a, loss_msg)

    def test_update_and_convergence_report(self, parties, small_dataset):
        host, guest, arbiter = parties
        rows = np.arange(small_dataset.n_train)
        to_a, _, _ = _one_round(host, guest, arbiter, rows)
        update_party(host, to_a, StepSchedule(lr0=0.1), OptimizerKind.GD, 0.5, 1e-10)
        np.testing.assert_allclose(host.w, -0.1 * np.asarray(to_a.payload["grad"]))
        assert host.round == 1
        assert host.prev_w is None
        report = report_convergence(host, 1)
        assert report.payload == {"converged": False}

    def test_update_rejects_other_partys_gradient(self, parties, small_dataset):
        host, guest, arbiter = parties
        rows = np.arange(small_dataset.n_train)
        _, to_b, _ = _one_round(host, guest, arbiter, rows)
        with pytest.raises(UnexpectedMessageError):
            update_party(host, to_b, StepSchedule(), OptimizerKind.GD, 0.5, 1e-10)


class TestHaltDecision:
    """Tests for the arbiter's stop rule."""

    def _reports(self, a, b):
        from bdfl.models.protocol import Message

        return [
            Message(round=3, sender=role, recipient=C, kind=MessageKind.CONVERGED, payload={"converged": flag})
            for role, flag in ((A, a), (B, b))
        ]

    def test_both_converged(self, keypair):
        assert halt_decision(ArbiterState(keypair), self._reports(True, True), 3, 10) == (True, "converged")

    def test_one_converged_continues(self, keypair):
        assert halt_decision(ArbiterState(keypair), self._reports(True, False), 3, 10) == (False, "continue")

    def test_budget_reached(self, keypair):
        assert halt_decision(ArbiterState(keypair), self._reports(False, False), 3, 3) == (
            True, "round budget reached",
        )
