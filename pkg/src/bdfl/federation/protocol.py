"""Federated training driver.

Each party is a generator-based state machine that yields the message it is
waiting for. The sequential scheduler resumes whichever machine has its
message available, in A, B, C order; the threaded scheduler runs each
machine on its own thread and lets channel receives block. Both produce the
same transcript, since every party draws its randomness from its own seeded
stream. `run_party` plays a single role in its own process over sockets.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Generator, Optional, Union

import numpy as np

from bdfl.config.settings import RunConfig, RunMode, SchedulerKind
from bdfl.crypto.paillier import KeyPair, generate_keypair
from bdfl.crypto.rng import make_rng
from bdfl.federation.exceptions import ProtocolError
from bdfl.federation.parties import (
    ArbiterState,
    PartyState,
    accept_key,
    arbiter_decrypt,
    check_convergence,
    grad_host_a,
    halt_decision,
    halt_message,
    publish_key,
    report_convergence,
    round_guest_b,
    round_host_a,
    update_party,
)
from bdfl.federation.transcript import Transcript
from bdfl.federation.transport import Channel, InProcessNetwork, SocketChannel, SocketNetwork
from bdfl.learning.evaluation import holdout_accuracy, train_exact_loss
from bdfl.learning.oracle import RoundCallback, Trajectory
from bdfl.learning.quasi_newton import lr_at
from bdfl.learning.taylor import select_batch
from bdfl.models.dataset import VerticalDataset
from bdfl.models.protocol import MessageKind, PartyRole
from bdfl.models.training import MetricsRecord
from bdfl.utils.logging import party_logger

logger = logging.getLogger(__name__)

Network = Union[InProcessNetwork, SocketNetwork]


@dataclass(frozen=True)
class Await:
    """What a party machine blocks on next."""

    kind: MessageKind
    round: int
    sender: PartyRole


@dataclass
class FederatedResult:
    trajectory: Trajectory
    transcript: Transcript
    halt_reason: str = ""

    @property
    def records(self) -> list[MetricsRecord]:
        return self.trajectory.records

    @property
    def final_w_a(self) -> np.ndarray:
        return self.trajectory.final_w_a

    @property
    def final_w_b(self) -> np.ndarray:
        return self.trajectory.final_w_b


# ----------------------------------------------------------------------
# Party machines
# ----------------------------------------------------------------------


class PartyMachine:
    role: PartyRole

    def __init__(self, channel: Channel, config: RunConfig, n_train: int):
        self.channel = channel
        self.config = config
        self.n_train = n_train
        self.current_round = 0
        self.halt_reason = ""
        self.log = party_logger(self.role.value)

    def rows(self, round: int) -> np.ndarray:
        training = self.config.training
        return select_batch(round, self.n_train, training.batch_size, self.config.run.seed)

    def receive(self, waiting: Await):
        return self.channel.receive(waiting.kind, waiting.round, waiting.sender)

    def play(self) -> Generator[Await, None, None]:
        raise NotImplementedError

    def _update(self, state: PartyState, msg) -> None:
        opt = self.config.optimizer
        update_party(state, msg, self.config.training.schedule, opt.kind, opt.alpha, opt.curvature_eps)
        check_convergence(state, self.config.training.tol)

    def _halted(self, msg) -> bool:
        self.halt_reason = msg.payload["reason"]
        if msg.payload["stop"]:
            self.log.info("Stopping after round %d: %s", msg.round, self.halt_reason)
            return True
        return False


class HostAMachine(PartyMachine):
    role = PartyRole.HOST_A

    def __init__(self, state: PartyState, channel: Channel, config: RunConfig, n_train: int):
        super().__init__(channel, config, n_train)
        self.state = state

    def play(self) -> Generator[Await, None, None]:
        scale_bits = self.config.crypto.scale_bits
        waiting = Await(MessageKind.PUB_KEY, 0, PartyRole.ARBITER_C)
        yield waiting
        accept_key(self.state, self.receive(waiting))

        k = 1
        while True:
            self.current_round = k
            rows = self.rows(k)
            self.channel.send(round_host_a(self.state, rows, k, scale_bits))

            waiting = Await(MessageKind.ENC_D, k, PartyRole.GUEST_B)
            yield waiting
            self.channel.send(grad_host_a(self.state, self.receive(waiting), rows, scale_bits))

            waiting = Await(MessageKind.PLAIN_GRAD, k, PartyRole.ARBITER_C)
            yield waiting
            self._update(self.state, self.receive(waiting))
            self.channel.send(report_convergence(self.state, k))

            waiting = Await(MessageKind.HALT, k, PartyRole.ARBITER_C)
            yield waiting
            if self._halted(self.receive(waiting)):
                return
            k += 1


class GuestBMachine(PartyMachine):
    role = PartyRole.GUEST_B

    def __init__(self, state: PartyState, channel: Channel, config: RunConfig, n_train: int):
        super().__init__(channel, config, n_train)
        self.state = state

    def play(self) -> Generator[Await, None, None]:
        scale_bits = self.config.crypto.scale_bits
        waiting = Await(MessageKind.PUB_KEY, 0, PartyRole.ARBITER_C)
        yield waiting
        accept_key(self.state, self.receive(waiting))

        k = 1
        while True:
            self.current_round = k
            waiting = Await(MessageKind.ENC_UA, k, PartyRole.HOST_A)
            yield waiting
            d_msg, loss_msg, grad_msg = round_guest_b(
                self.state, self.receive(waiting), self.rows(k), scale_bits
            )
            self.channel.send(d_msg)
            self.channel.send(grad_msg)
            self.channel.send(loss_msg)

            waiting = Await(MessageKind.PLAIN_GRAD, k, PartyRole.ARBITER_C)
            yield waiting
            self._update(self.state, self.receive(waiting))
            self.channel.send(report_convergence(self.state, k))

            waiting = Await(MessageKind.HALT, k, PartyRole.ARBITER_C)
            yield waiting
            if self._halted(self.receive(waiting)):
                return
            k += 1


class ArbiterCMachine(PartyMachine):
    role = PartyRole.ARBITER_C

    def __init__(
        self,
        state: ArbiterState,
        channel: Channel,
        config: RunConfig,
        on_round: Optional[RoundCallback] = None,
    ):
        super().__init__(channel, config, n_train=0)
        self.state = state
        self.on_round = on_round
        self.round_ms: list[float] = []

    def play(self) -> Generator[Await, None, None]:
        for party in (PartyRole.HOST_A, PartyRole.GUEST_B):
            self.channel.send(publish_key(self.state, party))

        k = 1
        while True:
            self.current_round = k
            started = time.perf_counter()
            inbound = []
            for waiting in (
                Await(MessageKind.ENC_GRAD, k, PartyRole.HOST_A),
                Await(MessageKind.ENC_GRAD, k, PartyRole.GUEST_B),
                Await(MessageKind.ENC_LOSS, k, PartyRole.GUEST_B),
            ):
                yield waiting
                inbound.append(self.receive(waiting))
            to_a, to_b, loss = arbiter_decrypt(self.state, *inbound)
            self.channel.send(to_a)
            self.channel.send(to_b)
            if self.on_round is not None:
                self.on_round(k, loss)

            reports = []
            for sender in (PartyRole.HOST_A, PartyRole.GUEST_B):
                waiting = Await(MessageKind.CONVERGED, k, sender)
                yield waiting
                reports.append(self.receive(waiting))
            stop, reason = halt_decision(self.state, reports, k, self.config.training.rounds)
            for party in (PartyRole.HOST_A, PartyRole.GUEST_B):
                self.channel.send(halt_message(k, party, stop, reason))
            self.round_ms.append((time.perf_counter() - started) * 1000.0)
            if stop:
                self.halt_reason = reason
                self.log.info("Halting after round %d: %s", k, reason)
                return
            k += 1


# ----------------------------------------------------------------------
# Schedulers
# ----------------------------------------------------------------------


def _with_context(machine: PartyMachine, exc: Exception) -> ProtocolError:
    if isinstance(exc, ProtocolError):
        return exc
    err = ProtocolError(f"{type(exc).__name__}: {exc}", round=machine.current_round, party=machine.role.value)
    err.__cause__ = exc
    return err


def run_sequential(machines: list[PartyMachine]) -> None:
    """Interleave the machines on the calling thread."""
    games = {m.role: m.play() for m in machines}
    waiting: dict[PartyRole, Optional[Await]] = {}
    for m in machines:
        try:
            waiting[m.role] = next(games[m.role])
        except StopIteration:
            waiting[m.role] = None
        except Exception as exc:
            raise _with_context(m, exc)

    while any(w is not None for w in waiting.values()):
        progressed = False
        for m in machines:
            w = waiting[m.role]
            if w is None or not m.channel.ready(w.kind, w.round, w.sender):
                continue
            progressed = True
            try:
                waiting[m.role] = games[m.role].send(None)
            except StopIteration:
                waiting[m.role] = None
            except Exception as exc:
                raise _with_context(m, exc)
        if not progressed:
            blocked = ", ".join(
                f"{role.value} on {w.kind.value}" for role, w in waiting.items() if w is not None
            )
            raise ProtocolError(f"no party can make progress ({blocked})")


def drive(machine: PartyMachine) -> None:
    """Run one machine to completion on the calling thread; receives block."""
    try:
        for _ in machine.play():
            pass
    except Exception as exc:
        raise _with_context(machine, exc)


def run_threaded(machines: list[PartyMachine], network: Network) -> None:
    """One thread per machine; the first failure aborts every mailbox."""
    errors: list[ProtocolError] = []
    lock = threading.Lock()

    def guarded(machine: PartyMachine) -> None:
        try:
            drive(machine)
        except ProtocolError as err:
            with lock:
                first = not errors
                errors.append(err)
            if first:
                machine.log.error("Failed: %s", err)
                network.abort(str(err))

    threads = [
        threading.Thread(target=guarded, args=(m,), name=f"party-{m.role.value}", daemon=True)
        for m in machines
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]


# ----------------------------------------------------------------------
# Public API
# ----------------------------------------------------------------------


def _party_state(role: PartyRole, config: RunConfig, data: VerticalDataset) -> PartyState:
    seed = config.run.seed
    if role is PartyRole.HOST_A:
        return PartyState.initial(role, data.X_a, make_rng(seed, "party-A"))
    return PartyState.initial(role, data.X_b, make_rng(seed, "party-B"), y=data.y)


def setup(
    config: RunConfig, data: VerticalDataset, keypair: Optional[KeyPair] = None
) -> tuple[PartyState, PartyState, ArbiterState, Transcript]:
    """Create the three party states; C owns the key pair, A and B start at w = 0, C = I.

    A pre-generated key pair may be passed in (tests reuse one across runs).
    """
    if keypair is None:
        keypair = generate_keypair(config.crypto.key_bits, seed=config.run.seed)
    host_a = _party_state(PartyRole.HOST_A, config, data)
    guest_b = _party_state(PartyRole.GUEST_B, config, data)
    return host_a, guest_b, ArbiterState(keypair=keypair), Transcript()


def _build_network(config: RunConfig, transcript: Transcript) -> Network:
    if config.run.mode is RunMode.FEDERATED_SOCKETS:
        t = config.transport
        return SocketNetwork(
            transcript, host=t.host, ports=t.ports, timeout=t.timeout_s, connect_timeout=t.connect_timeout_s
        )
    return InProcessNetwork(transcript)


def _collect_metrics(
    config: RunConfig,
    data: VerticalDataset,
    host_a: PartyState,
    guest_b: PartyState,
    arbiter: ArbiterState,
    transcript: Transcript,
    round_ms: list[float],
) -> Trajectory:
    trajectory = Trajectory(
        weights_a=list(host_a.weight_history), weights_b=list(guest_b.weight_history)
    )
    zeros_a, zeros_b = np.zeros(data.n_features_a), np.zeros(data.n_features_b)
    for i, loss in enumerate(arbiter.losses):
        k = i + 1
        pre_a = host_a.weight_history[i - 1] if i > 0 else zeros_a
        pre_b = guest_b.weight_history[i - 1] if i > 0 else zeros_b
        post_a, post_b = host_a.weight_history[i], guest_b.weight_history[i]
        acc = holdout_accuracy(data, post_a, post_b)
        trajectory.records.append(
            MetricsRecord(
                round=k,
                taylor_loss=loss,
                exact_loss=train_exact_loss(data, pre_a, pre_b),
                test_accuracy=None if np.isnan(acc) else acc,
                lr=lr_at(config.training.schedule, i),
                curvature_skipped_a=host_a.skip_history[i],
                curvature_skipped_b=guest_b.skip_history[i],
                msg_bytes=transcript.bytes_for_round(k),
                wall_ms=round_ms[i] if i < len(round_ms) else 0.0,
            )
        )
    return trajectory


def run(
    config: RunConfig,
    data: VerticalDataset,
    keypair: Optional[KeyPair] = None,
    on_round: Optional[RoundCallback] = None,
) -> FederatedResult:
    """Train with encrypted gradients until both parties converge or the round budget ends.

    Raises:
        ProtocolError: with round and party context on any failure inside a round.
    """
    host_a, guest_b, arbiter, transcript = setup(config, data, keypair)
    network = _build_network(config, transcript)
    machines: list[PartyMachine] = [
        HostAMachine(host_a, network.channel(PartyRole.HOST_A), config, data.n_train),
        GuestBMachine(guest_b, network.channel(PartyRole.GUEST_B), config, data.n_train),
        ArbiterCMachine(arbiter, network.channel(PartyRole.ARBITER_C), config, on_round),
    ]
    logger.info(
        "Federated run: %s, %d rounds, %s scheduler, %s transport",
        config.label(), config.training.rounds, config.run.scheduler.value,
        "socket" if isinstance(network, SocketNetwork) else "in-process",
    )
    try:
        if isinstance(network, SocketNetwork) or config.run.scheduler is SchedulerKind.THREADED:
            run_threaded(machines, network)
        else:
            run_sequential(machines)
    finally:
        network.close()

    for role, channel in network.channels.items():
        leftovers = channel.mailbox.leftovers()
        if leftovers:
            raise ProtocolError(
                f"{len(leftovers)} undelivered message(s), first {leftovers[0].kind.value}",
                party=role.value,
            )

    arbiter_machine = machines[2]
    trajectory = _collect_metrics(
        config, data, host_a, guest_b, arbiter, transcript, arbiter_machine.round_ms
    )
    trajectory.converged = arbiter_machine.halt_reason == "converged"
    logger.info(
        "Federated run finished: %d rounds, %d bytes exchanged",
        trajectory.rounds_executed, transcript.total_bytes,
    )
    return FederatedResult(trajectory=trajectory, transcript=transcript, halt_reason=arbiter_machine.halt_reason)


# ----------------------------------------------------------------------
# One party per process
# ----------------------------------------------------------------------


@dataclass
class PartyOutcome:
    """What one party knows when its own process finishes."""

    role: PartyRole
    transcript: Transcript
    rounds_executed: int
    halt_reason: str
    weights: Optional[np.ndarray] = None
    losses: list[float] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "role": self.role.value,
            "rounds_executed": self.rounds_executed,
            "halt_reason": self.halt_reason,
            "messages_sent": len(self.transcript),
            "bytes_sent": self.transcript.total_bytes,
            "weights": None if self.weights is None else [float(v) for v in self.weights],
            "taylor_losses": list(self.losses),
        }


def run_party(
    config: RunConfig,
    role: PartyRole,
    data: Optional[VerticalDataset] = None,
    keypair: Optional[KeyPair] = None,
    on_round: Optional[RoundCallback] = None,
) -> PartyOutcome:
    """Play a single role over sockets against peers found at `transport.peers`.

    A and B need the dataset for their own columns (B also for the labels);
    C needs only the key pair, generated from the run seed when not given.
    The returned transcript holds the messages this party sent.

    Raises:
        ValueError: if a peer address or the party's data is missing.
        ProtocolError: with round and party context on any failure inside a round.
    """
    transport = config.transport
    peers = {r: transport.peer_address(r.config_key) for r in PartyRole}
    transcript = Transcript()

    machine: PartyMachine
    if role is PartyRole.ARBITER_C:
        if keypair is None:
            keypair = generate_keypair(config.crypto.key_bits, seed=config.run.seed)
        arbiter = ArbiterState(keypair=keypair)
    elif data is None:
        raise ValueError(f"party {role.value} needs its dataset columns")

    channel = SocketChannel(
        role, transcript, host=transport.host, port=peers[role][1],
        timeout=transport.timeout_s, connect_timeout=transport.connect_timeout_s,
    )
    channel.connect(peers)
    if role is PartyRole.ARBITER_C:
        machine = ArbiterCMachine(arbiter, channel, config, on_round)
    elif role is PartyRole.HOST_A:
        machine = HostAMachine(_party_state(role, config, data), channel, config, data.n_train)
    else:
        machine = GuestBMachine(_party_state(role, config, data), channel, config, data.n_train)

    machine.log.info(
        "Party %s on %s:%d, %s, up to %d rounds", role.value, *channel.address,
        config.label(), config.training.rounds,
    )
    try:
        drive(machine)
    finally:
        channel.close()

    leftovers = channel.mailbox.leftovers()
    if leftovers:
        raise ProtocolError(
            f"{len(leftovers)} undelivered message(s), first {leftovers[0].kind.value}", party=role.value
        )
    if role is PartyRole.ARBITER_C:
        return PartyOutcome(
            role, transcript, len(arbiter.losses), machine.halt_reason, losses=list(arbiter.losses)
        )
    state = machine.state
    return PartyOutcome(role, transcript, state.round, machine.halt_reason, weights=state.w.copy())
