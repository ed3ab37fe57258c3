"""Paillier cryptosystem with fixed-point plaintexts.

Ciphertexts carry only the exponent of the encoded plaintext next to the
group element. Results that outgrow the safe range are caught on decode.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Optional

import sympy

from bdfl.crypto.encoding import EncodedNumber
from bdfl.crypto.exceptions import (
    DecryptionError,
    KeyMismatchError,
    UnsupportedKeySizeError,
)
from bdfl.crypto.rng import make_rng

try:
    import gmpy2
except ImportError:  # builtin pow is used instead
    gmpy2 = None

logger = logging.getLogger(__name__)

SUPPORTED_KEY_BITS = (512, 1024, 2048, 3072)
DEFAULT_KEY_BITS = 2048


def powmod(base: int, exp: int, mod: int) -> int:
    if gmpy2 is not None:
        return int(gmpy2.powmod(base, exp, mod))
    return pow(base, exp, mod)


# ----------------------------------------------------------------------
# Keys
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PublicKey:
    """Paillier public key (n, g) with g = n + 1."""

    n: int
    g: int
    key_bits: int

    @cached_property
    def n_squared(self) -> int:
        return self.n * self.n

    def to_dict(self) -> dict[str, Any]:
        return {"n": format(self.n, "x"), "g": format(self.g, "x"), "key_bits": self.key_bits}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PublicKey:
        return cls(n=int(data["n"], 16), g=int(data["g"], 16), key_bits=int(data["key_bits"]))


@dataclass(frozen=True)
class PrivateKey:
    """Paillier private key: lambda = lcm(p-1, q-1), mu = lambda^-1 mod n."""

    lam: int
    mu: int

    def to_dict(self) -> dict[str, Any]:
        return {"lambda": format(self.lam, "x"), "mu": format(self.mu, "x")}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PrivateKey:
        return cls(lam=int(data["lambda"], 16), mu=int(data["mu"], 16))


@dataclass(frozen=True)
class KeyPair:
    public_key: PublicKey
    private_key: PrivateKey

    @property
    def key_bits(self) -> int:
        return self.public_key.key_bits

    @property
    def n(self) -> int:
        return self.public_key.n

    def to_dict(self) -> dict[str, Any]:
        """Private-key file form: lambda and mu plus the public key they belong to."""
        return {**self.private_key.to_dict(), "public_key": self.public_key.to_dict()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> KeyPair:
        return cls(PublicKey.from_dict(data["public_key"]), PrivateKey.from_dict(data))


def _random_prime(bits: int, rng: random.Random) -> int:
    """Draw a prime of exactly `bits` bits with the top two bits set."""
    while True:
        candidate = rng.getrandbits(bits) | (0b11 << (bits - 2)) | 1
        prime = int(sympy.nextprime(candidate - 1))
        if prime.bit_length() == bits:
            return prime


def generate_keypair(key_bits: int = DEFAULT_KEY_BITS, seed: Optional[int] = None) -> KeyPair:
    """Generate a Paillier key pair.

    With a seed, primes are drawn from a deterministic stream so the same
    (key_bits, seed) always yields the same keys.

    Raises:
        UnsupportedKeySizeError: if key_bits is not a supported size.
    """
    if key_bits not in SUPPORTED_KEY_BITS:
        raise UnsupportedKeySizeError(key_bits, SUPPORTED_KEY_BITS)

    rng = make_rng(seed, f"paillier-keygen-{key_bits}")
    half = key_bits // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(half, rng)
        if p != q and (p * q).bit_length() == key_bits:
            break

    n = p * q
    lam = math.lcm(p - 1, q - 1)
    mu = pow(lam, -1, n)
    logger.info("Generated %d-bit Paillier key pair", key_bits)
    return KeyPair(PublicKey(n=n, g=n + 1, key_bits=key_bits), PrivateKey(lam=lam, mu=mu))


# ----------------------------------------------------------------------
# Ciphertexts
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Ciphertext:
    """Encryption of an EncodedNumber. Only (value, exponent) go on the wire."""

    value: int
    exponent: int
    public_key: PublicKey

    def to_wire(self) -> dict[str, Any]:
        return {"value": format(self.value, "x"), "exponent": self.exponent}

    @classmethod
    def from_wire(cls, data: dict[str, Any], public_key: PublicKey) -> Ciphertext:
        return cls(value=int(data["value"], 16), exponent=int(data["exponent"]), public_key=public_key)


def _random_unit(pk: PublicKey, rng: random.Random) -> int:
    while True:
        r = rng.randrange(1, pk.n)
        if math.gcd(r, pk.n) == 1:
            return r


def raw_encrypt(pk: PublicKey, e: EncodedNumber) -> Ciphertext:
    """Deterministic, unobfuscated encryption g^m = 1 + m*n mod n^2.

    Only for folding a plaintext into an already-randomized ciphertext.
    """
    if e.n != pk.n:
        raise KeyMismatchError("encrypt")
    return Ciphertext((1 + e.mantissa * pk.n) % pk.n_squared, e.exponent, pk)


def encrypt(pk: PublicKey, e: EncodedNumber, rng: random.Random) -> Ciphertext:
    """Randomized encryption c = g^m * r^n mod n^2."""
    raw = raw_encrypt(pk, e)
    r = _random_unit(pk, rng)
    value = (raw.value * powmod(r, pk.n, pk.n_squared)) % pk.n_squared
    return Ciphertext(value, raw.exponent, pk)


def decrypt(kp: KeyPair, c: Ciphertext) -> EncodedNumber:
    """Recover the EncodedNumber (mantissa and exponent) inside c.

    Overflow of accumulated results shows up when the EncodedNumber is
    decoded: mantissas between n/3 and n - n/3 raise EncodingOverflowError.

    Raises:
        KeyMismatchError: if c was produced under another public key.
        DecryptionError: if c.value is outside [0, n^2) or shares a factor with n.
    """
    pk = kp.public_key
    if c.public_key.n != pk.n:
        raise KeyMismatchError("decrypt")
    if not 0 <= c.value < pk.n_squared:
        raise DecryptionError("ciphertext value outside [0, n^2)")
    if math.gcd(c.value, pk.n) != 1:
        raise DecryptionError("ciphertext value not coprime with n")
    x = powmod(c.value, kp.private_key.lam, pk.n_squared)
    m = ((x - 1) // pk.n) * kp.private_key.mu % pk.n
    return EncodedNumber(m, c.exponent, pk.n)


def _rescale(c: Ciphertext, exponent: int) -> Ciphertext:
    """Lower c's exponent by multiplying the plaintext by 2**diff."""
    shift = c.exponent - exponent
    if shift == 0:
        return c
    pk = c.public_key
    return Ciphertext(powmod(c.value, 1 << shift, pk.n_squared), exponent, pk)


def ct_add(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Homomorphic addition: D(c1 + c2) = D(c1) + D(c2).

    The operand with the larger exponent is rescaled first.
    """
    if c1.public_key.n != c2.public_key.n:
        raise KeyMismatchError("ct_add")
    pk = c1.public_key
    exponent = min(c1.exponent, c2.exponent)
    a, b = _rescale(c1, exponent), _rescale(c2, exponent)
    return Ciphertext((a.value * b.value) % pk.n_squared, exponent, pk)


def ct_add_plain(c: Ciphertext, e: EncodedNumber) -> Ciphertext:
    """Add a plaintext into a ciphertext; c's randomness covers the result."""
    return ct_add(c, raw_encrypt(c.public_key, e))


def ct_scalar_mul(c: Ciphertext, k: EncodedNumber) -> Ciphertext:
    """Homomorphic scalar product: D(c * k) = D(c) * decode(k).

    The result exponent is c.exponent + k.exponent.
    """
    pk = c.public_key
    if k.n != pk.n:
        raise KeyMismatchError("ct_scalar_mul")
    scalar = k.signed_mantissa
    if scalar >= 0:
        value = powmod(c.value, scalar, pk.n_squared)
    else:
        # Negative scalars: exponentiate the inverse by |k| (short exponent).
        value = powmod(pow(c.value, -1, pk.n_squared), -scalar, pk.n_squared)
    return Ciphertext(value, c.exponent + k.exponent, pk)


def ct_sum(ciphertexts: list[Ciphertext]) -> Ciphertext:
    """Left fold of ct_add over a non-empty list."""
    if not ciphertexts:
        raise ValueError("ct_sum needs at least one ciphertext")
    total = ciphertexts[0]
    for c in ciphertexts[1:]:
        total = ct_add(total, c)
    return total
