"""Randomness sources for key generation and encryption.

A seeded run draws every random integer from `random.Random` streams derived
from (seed, stream label), which makes keys and ciphertexts replayable. Without
a seed the OS CSPRNG is used.
"""

import hashlib
import random
import secrets
from typing import Optional


def derive_seed(seed: int, stream: str) -> int:
    """Mix a run seed with a stream label into an independent 256-bit seed."""
    digest = hashlib.sha256(f"{seed}:{stream}".encode()).digest()
    return int.from_bytes(digest, "big")


def make_rng(seed: Optional[int], stream: str = "") -> random.Random:
    """Return a deterministic stream for `seed`, or the system CSPRNG if seed is None."""
    if seed is None:
        return secrets.SystemRandom()
    return random.Random(derive_seed(seed, stream))
