"""Conversions between real vectors, ciphertext vectors and message payloads."""

import random
from typing import Any, Iterable

import numpy as np

from bdfl.crypto.encoding import encode
from bdfl.crypto.paillier import Ciphertext, PublicKey, encrypt


def encrypt_vector(
    values: Iterable[float], public_key: PublicKey, scale_bits: int, rng: random.Random
) -> list[Ciphertext]:
    return [encrypt(public_key, encode(float(v), scale_bits, public_key.n), rng) for v in values]


def ciphertexts_to_payload(ciphertexts: list[Ciphertext]) -> list[dict[str, Any]]:
    return [c.to_wire() for c in ciphertexts]


def payload_to_ciphertexts(items: list[dict[str, Any]], public_key: PublicKey) -> list[Ciphertext]:
    return [Ciphertext.from_wire(item, public_key) for item in items]


def floats_to_payload(values: np.ndarray) -> list[float]:
    # JSON floats round-trip exactly (repr), so no precision is lost on the wire.
    return [float(v) for v in np.asarray(values, dtype=np.float64)]


def payload_to_floats(items: list[float]) -> np.ndarray:
    return np.asarray(items, dtype=np.float64)
