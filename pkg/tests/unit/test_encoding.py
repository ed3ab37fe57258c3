"""Unit tests for fixed-point encoding."""

import math

import pytest

from bdfl.crypto.encoding import EncodedNumber, decode, encode, max_int
from bdfl.crypto.exceptions import EncodingOverflowError, KeyMismatchError

N = (1 << 127) - 1  # any odd modulus works for encoding


class TestEncode:
    """Tests for encode / decode."""

    @pytest.mark.parametrize("x", [0.0, 1.0, -1.0, 0.1, -3.75, 12345.678, -1e-9, math.pi])
    def test_round_trip_within_one_quantum(self, x):
        """decode(encode(x)) lies within 2^-scale_bits * max(1, |x|) of x."""
        scale_bits = 40
        assert abs(decode(encode(x, scale_bits, N)) - x) <= 2.0**-scale_bits * max(1.0, abs(x))

    def test_negative_values_live_in_upper_half(self):
        e = encode(-2.0, 10, N)
        assert e.mantissa > N // 2
        assert e.signed_mantissa == -2048

    def test_exponent_is_minus_scale_bits(self):
        e = encode(1.5, 40, N)
        assert e.exponent == -40
        assert e.scale_bits == 40

    @pytest.mark.parametrize("x", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite_rejected(self, x):
        with pytest.raises(ValueError):
            encode(x, 40, N)

    def test_non_positive_scale_rejected(self):
        with pytest.raises(ValueError):
            encode(1.0, 0, N)

    def test_overflow_raises(self):
        """Values whose mantissa reaches n/3 cannot be encoded."""
        too_big = math.ldexp(1.0, 127)
        with pytest.raises(EncodingOverflowError) as exc_info:
            encode(too_big, 40, N)
        assert exc_info.value.limit_bits == max_int(N).bit_length()

    def test_overflow_band_rejected_on_decode(self):
        """Mantissas strictly between n/3 and n - n/3 never come from encode."""
        limit = max_int(N)
        assert decode(EncodedNumber(limit, 0, N)) == float(limit)
        assert decode(EncodedNumber(N - limit, 0, N)) == -float(limit)
        for mantissa in (limit + 1, N // 2, N - limit - 1):
            with pytest.raises(EncodingOverflowError):
                decode(EncodedNumber(mantissa, 0, N))


class TestEncodedNumber:
    """Tests for rescaling and plaintext addition."""

    def test_rescale_keeps_value(self):
        e = encode(0.75, 10, N)
        lowered = e.rescale(-30)
        assert lowered.exponent == -30
        assert decode(lowered) == 0.75

    def test_rescale_upward_rejected(self):
        with pytest.raises(ValueError):
            encode(0.75, 30, N).rescale(-10)

    def test_addition_aligns_exponents(self):
        total = encode(1.25, 10, N) + encode(-0.5, 20, N)
        assert total.exponent == -20
        assert decode(total) == 0.75

    def test_addition_across_moduli_rejected(self):
        with pytest.raises(KeyMismatchError):
            encode(1.0, 10, N) + encode(1.0, 10, N - 2)

    def test_mantissa_range_checked(self):
        with pytest.raises(ValueError):
            EncodedNumber(N, -10, N)
