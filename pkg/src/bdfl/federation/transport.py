"""Message channels between the three parties.

Every party talks through a `Channel` bound to its role. Two bindings exist:
in-process mailboxes, and TCP with 4-byte big-endian length-prefixed JSON
frames. Party logic is identical over both.

Receives block until the message arrives, the run is aborted, or (sockets
only) the sending peer's connection closes without it. Honest work inside a
round is never cut short by a deadline; a per-message receive deadline exists
only as an opt-in for socket peers.
"""

from __future__ import annotations

import logging
import socket
import struct
import threading
import time
from typing import Optional

from bdfl.federation.exceptions import ProtocolError, UnexpectedMessageError
from bdfl.federation.transcript import Transcript
from bdfl.models.protocol import ROUTES, Message, MessageKind, PartyRole

logger = logging.getLogger(__name__)

FRAME_HEADER = struct.Struct(">I")
MAX_FRAME_BYTES = 1 << 30
CONNECT_RETRY_S = 0.1


class Mailbox:
    """Pending inbound messages of one party, matched by (kind, sender, round)."""

    def __init__(self, role: PartyRole):
        self.role = role
        self._pending: list[Message] = []
        self._cond = threading.Condition()
        self._abort_reason: Optional[str] = None
        self._gone: set[PartyRole] = set()

    def deliver(self, message: Message) -> None:
        with self._cond:
            self._pending.append(message)
            self._cond.notify_all()

    def _find(self, kind: MessageKind, round: int, sender: Optional[PartyRole]) -> Optional[int]:
        for i, msg in enumerate(self._pending):
            if msg.kind is not kind or (sender is not None and msg.sender is not sender):
                continue
            if msg.round < round:
                raise UnexpectedMessageError(
                    f"{kind.value} for round {round}",
                    f"stale {kind.value} from round {msg.round}",
                    round=round, party=self.role.value,
                )
            if msg.round == round:
                return i
        return None

    def ready(self, kind: MessageKind, round: int, sender: Optional[PartyRole] = None) -> bool:
        with self._cond:
            return self._find(kind, round, sender) is not None

    def take(
        self,
        kind: MessageKind,
        round: int,
        sender: Optional[PartyRole] = None,
        timeout: Optional[float] = None,
    ) -> Message:
        """Remove and return the matching message, blocking until it arrives.

        Raises:
            ProtocolError: on abort, when `sender` disconnected without sending
                it, or when `timeout` (if any) elapses first.
        """
        with self._cond:
            found = self._cond.wait_for(
                lambda: self._abort_reason is not None
                or self._find(kind, round, sender) is not None
                or sender in self._gone,
                timeout,
            )
            if self._abort_reason is not None:
                raise ProtocolError(f"aborted: {self._abort_reason}", round=round, party=self.role.value)
            index = self._find(kind, round, sender)
            if index is not None:
                return self._pending.pop(index)
            if found:
                raise ProtocolError(
                    f"party {sender.value} disconnected before sending {kind.value}",
                    round=round, party=self.role.value,
                )
            raise ProtocolError(f"timed out waiting for {kind.value}", round=round, party=self.role.value)

    def peer_gone(self, sender: PartyRole) -> None:
        """Mark that no further messages from `sender` can arrive."""
        with self._cond:
            self._gone.add(sender)
            self._cond.notify_all()

    def abort(self, reason: str) -> None:
        with self._cond:
            if self._abort_reason is None:
                self._abort_reason = reason
            self._cond.notify_all()

    def leftovers(self) -> list[Message]:
        with self._cond:
            return list(self._pending)


class Channel:
    """A party's view of the network: send as its role, receive from its mailbox."""

    def __init__(self, role: PartyRole, transcript: Transcript, timeout: Optional[float] = None):
        self.role = role
        self.transcript = transcript
        self.timeout = timeout
        self.mailbox = Mailbox(role)

    def send(self, message: Message) -> None:
        if message.sender is not self.role:
            raise ProtocolError(
                f"cannot send as {message.sender.value}", round=message.round, party=self.role.value
            )
        if (message.sender, message.recipient) not in ROUTES[message.kind]:
            raise UnexpectedMessageError(
                f"a legal route for {message.kind.value}",
                f"{message.sender.value}->{message.recipient.value}",
                round=message.round, party=self.role.value,
            )
        self.transcript.append(message)
        self._deliver(message)

    def _deliver(self, message: Message) -> None:
        raise NotImplementedError

    def receive(self, kind: MessageKind, round: int, sender: Optional[PartyRole] = None) -> Message:
        return self.mailbox.take(kind, round, sender, self.timeout)

    def ready(self, kind: MessageKind, round: int, sender: Optional[PartyRole] = None) -> bool:
        return self.mailbox.ready(kind, round, sender)

    def close(self) -> None:
        pass


class InProcessChannel(Channel):
    def __init__(self, role: PartyRole, network: InProcessNetwork):
        super().__init__(role, network.transcript)
        self._network = network

    def _deliver(self, message: Message) -> None:
        self._network.channels[message.recipient].mailbox.deliver(message)


class InProcessNetwork:
    """Three in-process channels sharing one transcript.

    Receives never time out here; a failing party aborts every mailbox instead.
    """

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self.channels: dict[PartyRole, Channel] = {}
        for role in PartyRole:
            self.channels[role] = InProcessChannel(role, self)

    def channel(self, role: PartyRole) -> Channel:
        return self.channels[role]

    def abort(self, reason: str) -> None:
        for ch in self.channels.values():
            ch.mailbox.abort(reason)

    def close(self) -> None:
        for ch in self.channels.values():
            ch.close()


# ----------------------------------------------------------------------
# Socket transport
# ----------------------------------------------------------------------


def write_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(FRAME_HEADER.pack(len(payload)) + payload)


def _read_exact(sock: socket.socket, size: int) -> Optional[bytes]:
    chunks = []
    remaining = size
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> Optional[bytes]:
    """Read one length-prefixed frame; None on a clean end of stream."""
    header = _read_exact(sock, FRAME_HEADER.size)
    if header is None:
        return None
    (length,) = FRAME_HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    body = _read_exact(sock, length)
    if body is None:
        raise ProtocolError("connection closed mid-frame")
    return body


def connect_with_retry(address: tuple[str, int], deadline_s: float) -> socket.socket:
    """Connect to a peer that may not be listening yet, retrying until deadline_s."""
    give_up = time.monotonic() + deadline_s
    while True:
        try:
            sock = socket.create_connection(address, timeout=deadline_s)
        except OSError as exc:
            if time.monotonic() >= give_up:
                raise ProtocolError(f"could not reach {address[0]}:{address[1]}: {exc}") from exc
            time.sleep(CONNECT_RETRY_S)
            continue
        sock.settimeout(None)
        return sock


class SocketChannel(Channel):
    """Channel bound to a listening TCP socket.

    Inbound connections are read by background threads into the mailbox;
    outbound messages go over one lazily opened connection per peer. When an
    inbound connection ends, its sender is marked gone so a receive waiting on
    that peer fails instead of hanging.
    """

    def __init__(
        self,
        role: PartyRole,
        transcript: Transcript,
        host: str = "127.0.0.1",
        port: int = 0,
        timeout: Optional[float] = None,
        connect_timeout: float = 60.0,
    ):
        super().__init__(role, transcript, timeout)
        self.connect_timeout = connect_timeout
        self._server = socket.create_server((host, port))
        self._peers: dict[PartyRole, tuple[str, int]] = {}
        self._out: dict[PartyRole, socket.socket] = {}
        self._out_lock = threading.Lock()
        self._readers: list[threading.Thread] = []
        self._closed = threading.Event()
        self._acceptor = threading.Thread(
            target=self._accept_loop, name=f"accept-{role.value}", daemon=True
        )
        self._acceptor.start()
        logger.debug("Party %s listening on %s:%d", role.value, *self.address)

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.getsockname()[:2]
        return host, port

    def connect(self, peers: dict[PartyRole, tuple[str, int]]) -> None:
        self._peers = {role: addr for role, addr in peers.items() if role is not self.role}

    def _accept_loop(self) -> None:
        while not self._closed.is_set():
            try:
                conn, remote = self._server.accept()
            except OSError:
                return
            reader = threading.Thread(
                target=self._read_loop, args=(conn, remote), name=f"read-{self.role.value}", daemon=True
            )
            self._readers.append(reader)
            reader.start()

    def _read_loop(self, conn: socket.socket, remote: tuple) -> None:
        sender: Optional[PartyRole] = None
        with conn:
            while True:
                try:
                    frame = read_frame(conn)
                except (OSError, ProtocolError) as exc:
                    if not self._closed.is_set():
                        self.mailbox.abort(f"transport failure at {self.role.value}: {exc}")
                    return
                if frame is None:
                    break
                try:
                    message = Message.from_wire(frame.decode("utf-8"))
                except ValueError as exc:
                    origin = sender.value if sender is not None else f"{remote[0]}:{remote[1]}"
                    self.mailbox.abort(
                        f"malformed {len(frame)}-byte frame from {origin} at {self.role.value}: {exc}"
                    )
                    return
                sender = message.sender
                self.mailbox.deliver(message)
        if sender is not None:
            self.mailbox.peer_gone(sender)

    def _deliver(self, message: Message) -> None:
        with self._out_lock:
            sock = self._out.get(message.recipient)
            if sock is None:
                if message.recipient not in self._peers:
                    raise ProtocolError(
                        f"no address for party {message.recipient.value}",
                        round=message.round, party=self.role.value,
                    )
                sock = connect_with_retry(self._peers[message.recipient], self.connect_timeout)
                self._out[message.recipient] = sock
            write_frame(sock, message.to_wire().encode("utf-8"))

    def close(self) -> None:
        self._closed.set()
        with self._out_lock:
            for sock in self._out.values():
                sock.close()
            self._out.clear()
        self._server.close()


class SocketNetwork:
    """Three socket channels in one process, wired to each other's addresses."""

    def __init__(
        self,
        transcript: Transcript,
        host: str = "127.0.0.1",
        ports: Optional[dict[str, int]] = None,
        timeout: Optional[float] = None,
        connect_timeout: float = 60.0,
    ):
        ports = ports or {}
        self.transcript = transcript
        self.channels: dict[PartyRole, SocketChannel] = {
            role: SocketChannel(
                role, transcript, host, ports.get(role.config_key, 0), timeout, connect_timeout
            )
            for role in PartyRole
        }
        addresses = {role: ch.address for role, ch in self.channels.items()}
        for ch in self.channels.values():
            ch.connect(addresses)

    def channel(self, role: PartyRole) -> Channel:
        return self.channels[role]

    def abort(self, reason: str) -> None:
        for ch in self.channels.values():
            ch.mailbox.abort(reason)

    def close(self) -> None:
        for ch in self.channels.values():
            ch.close()
