"""Federation exception classes."""

from typing import Optional


class ProtocolError(RuntimeError):
    """Raised when a protocol round cannot complete.

    Carries the round index and the role of the party that failed, when known.
    """

    def __init__(self, reason: str, round: Optional[int] = None, party: Optional[str] = None):
        self.reason = reason
        self.round = round
        self.party = party
        where = []
        if round is not None:
            where.append(f"round {round}")
        if party is not None:
            where.append(f"party {party}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(f"{prefix}{reason}")


class UnexpectedMessageError(ProtocolError):
    """Raised when a party receives a message it has no use for at this point."""

    def __init__(self, expected: str, got: str, round: Optional[int] = None, party: Optional[str] = None):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected}, got {got}", round=round, party=party)


class PrivacyViolationError(ProtocolError):
    """Raised when a party would hold or send data its role must never see."""

    def __init__(self, what: str, party: str):
        self.what = what
        super().__init__(f"party {party} must not hold {what}", party=party)
