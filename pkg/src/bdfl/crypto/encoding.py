"""Fixed-point encoding of signed reals into the Paillier plaintext ring Z_n.

A real x is stored as a mantissa m with x ~= m * 2**exponent. Negative
mantissas live in the upper half of the ring (n - |m|), so decode treats
any mantissa above n/2 as negative. Mantissas between n/3 and n - n/3 are
never produced by encode and mark an overflowed computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from bdfl.crypto.exceptions import EncodingOverflowError, KeyMismatchError

DEFAULT_SCALE_BITS = 40


def max_int(n: int) -> int:
    """Largest mantissa magnitude accepted by encode (n/3 leaves room to accumulate)."""
    return n // 3


@dataclass(frozen=True)
class EncodedNumber:
    """A fixed-point number: mantissa in [0, n), power-of-two exponent."""

    mantissa: int
    exponent: int
    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.mantissa < self.n:
            raise ValueError(f"mantissa must lie in [0, n), got {self.mantissa}")

    @property
    def scale_bits(self) -> int:
        return -self.exponent

    @property
    def signed_mantissa(self) -> int:
        """Mantissa mapped back to (-n/2, n/2]."""
        if self.mantissa > self.n // 2:
            return self.mantissa - self.n
        return self.mantissa

    def rescale(self, exponent: int) -> EncodedNumber:
        """Re-express at a smaller (or equal) exponent without losing precision."""
        if exponent > self.exponent:
            raise ValueError(
                f"can only lower the exponent ({self.exponent} -> {exponent} requested)"
            )
        shift = self.exponent - exponent
        signed = self.signed_mantissa << shift
        if abs(signed) > self.n // 2:
            raise EncodingOverflowError(
                "rescaled mantissa", abs(signed).bit_length(), (self.n // 2).bit_length()
            )
        return EncodedNumber(signed % self.n, exponent, self.n)

    def __add__(self, other: EncodedNumber) -> EncodedNumber:
        if other.n != self.n:
            raise KeyMismatchError("EncodedNumber addition")
        exponent = min(self.exponent, other.exponent)
        a, b = self.rescale(exponent), other.rescale(exponent)
        return EncodedNumber((a.mantissa + b.mantissa) % self.n, exponent, self.n)

    def decode(self) -> float:
        return decode(self)


def encode(x: float, scale_bits: int, n: int) -> EncodedNumber:
    """Encode x with `scale_bits` fractional bits: mantissa = round(x * 2**scale_bits).

    Raises:
        ValueError: if x is not finite.
        EncodingOverflowError: if |x| * 2**scale_bits reaches n/3.
    """
    if not math.isfinite(x):
        raise ValueError(f"cannot encode non-finite value {x!r}")
    if scale_bits <= 0:
        raise ValueError(f"scale_bits must be positive, got {scale_bits}")
    # ldexp scales by a power of two exactly, so rounding happens only once.
    signed = int(round(math.ldexp(float(x), scale_bits)))
    limit = max_int(n)
    if abs(signed) >= limit:
        raise EncodingOverflowError(
            f"encode({x!r})", abs(signed).bit_length(), limit.bit_length()
        )
    return EncodedNumber(signed % n, -scale_bits, n)


def decode(e: EncodedNumber) -> float:
    """Return the real value of an EncodedNumber (correctly rounded to float).

    Raises:
        EncodingOverflowError: if the mantissa lies strictly between n/3 and
            n - n/3. No encoded value lands there, so a homomorphic result
            that does has wrapped around the ring.
    """
    limit = max_int(e.n)
    if limit < e.mantissa < e.n - limit:
        raise EncodingOverflowError("decode", e.mantissa.bit_length(), limit.bit_length())
    m = e.signed_mantissa
    if e.exponent >= 0:
        return float(m << e.exponent)
    return float(Fraction(m, 1 << -e.exponent))
