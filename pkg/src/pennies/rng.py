"""Deterministic 64-bit generator for match play.

SplitMix64: a single 64-bit word of state, one add and two xor-shift
multiplies per output word.  Good enough statistically to serve as the
null model the detector bank is audited against, and trivially seedable
so every match replays bit for bit.
"""

from __future__ import annotations

from fractions import Fraction

from .bits import BitString

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state", "_buf", "_nbuf")

    def __init__(self, seed: int):
        self.state = seed & MASK64
        self._buf = 0
        self._nbuf = 0

    def next_word(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_bit(self) -> int:
        # bits served LSB-first from each word
        if self._nbuf == 0:
            self._buf = self.next_word()
            self._nbuf = 64
        bit = self._buf & 1
        self._buf >>= 1
        self._nbuf -= 1
        return bit

    def bits(self, n: int) -> BitString:
        return BitString([self.next_bit() for _ in range(n)])

    def bernoulli(self, p: Fraction) -> int:
        """Exact draw with P(1) = p: compare a lazily drawn uniform to p.

        Consumes fair bits as the binary expansion of U and answers as soon
        as the remaining interval decides U < p.  No rejection, expected two
        bits per draw.
        """
        if not 0 <= p <= 1:
            raise ValueError("probability out of range: %s" % (p,))
        num, den = p.numerator, p.denominator
        while True:
            num *= 2
            if self.next_bit():
                if num <= den:
                    return 0  # U >= 1/2 >= p
                num -= den
            else:
                if num >= den:
                    return 1  # U < 1/2 <= p
        # unreachable

    def split(self, salt: int) -> "SplitMix64":
        """Independent child stream; deterministic in (state, salt)."""
        child = SplitMix64(self.state ^ (salt * GOLDEN) ^ 0x5851F42D4C957F2D)
        child.next_word()
        return child
