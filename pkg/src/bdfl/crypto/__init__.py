"""Additively homomorphic encryption over fixed-point encoded reals."""

from bdfl.crypto.encoding import DEFAULT_SCALE_BITS, EncodedNumber, decode, encode
from bdfl.crypto.exceptions import (
    DecryptionError,
    EncodingOverflowError,
    KeyMismatchError,
    UnsupportedKeySizeError,
)
from bdfl.crypto.paillier import (
    SUPPORTED_KEY_BITS,
    Ciphertext,
    KeyPair,
    PrivateKey,
    PublicKey,
    ct_add,
    ct_add_plain,
    ct_scalar_mul,
    ct_sum,
    decrypt,
    encrypt,
    generate_keypair,
)
from bdfl.crypto.rng import make_rng

__all__ = [
    "DEFAULT_SCALE_BITS",
    "SUPPORTED_KEY_BITS",
    "Ciphertext",
    "DecryptionError",
    "EncodedNumber",
    "EncodingOverflowError",
    "KeyMismatchError",
    "KeyPair",
    "PrivateKey",
    "PublicKey",
    "UnsupportedKeySizeError",
    "ct_add",
    "ct_add_plain",
    "ct_scalar_mul",
    "ct_sum",
    "decode",
    "decrypt",
    "encode",
    "encrypt",
    "generate_keypair",
    "make_rng",
]
