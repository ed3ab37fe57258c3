"""Crypto exception classes."""


class UnsupportedKeySizeError(ValueError):
    """Raised when a key size outside the supported set is requested."""

    def __init__(self, key_bits: int, supported: tuple[int, ...]):
        self.key_bits = key_bits
        self.supported = supported
        super().__init__(
            f"Unsupported key size {key_bits}. "
            f"Supported: {', '.join(str(b) for b in supported)}"
        )


class EncodingOverflowError(OverflowError):
    """Raised when a value (or a homomorphic result) would leave the safe ring range."""

    def __init__(self, what: str, magnitude_bits: int, limit_bits: int):
        self.what = what
        self.magnitude_bits = magnitude_bits
        self.limit_bits = limit_bits
        super().__init__(
            f"{what} needs {magnitude_bits} bits of headroom, "
            f"only {limit_bits} available"
        )


class KeyMismatchError(ValueError):
    """Raised when operands or a ciphertext belong to a different public key."""

    def __init__(self, operation: str):
        self.operation = operation
        super().__init__(f"{operation}: operands use different public keys")


class DecryptionError(ValueError):
    """Raised when a ciphertext value cannot be a valid Paillier ciphertext."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Decryption failed: {reason}")
