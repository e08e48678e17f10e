"""Finite binary strings and the self-delimiting pairing code.

BitString stores the bits packed in a Python int (an arbitrary-precision
machine-word vector) together with an explicit bit length, so values such as
"0001" and "01" stay distinct and concatenation is two shifts.  Bit 0 is the
leftmost bit.  Instances are immutable and hashable.
"""

from __future__ import annotations

from typing import Iterable, Iterator


class DecodeError(ValueError):
    """Raised when a string is not a valid pairing of two strings."""


class BitString:
    __slots__ = ("_value", "_length")

    def __init__(self, bits: "str | Iterable[int] | BitString" = ""):
        if isinstance(bits, BitString):
            self._value = bits._value
            self._length = bits._length
            return
        if isinstance(bits, str):
            stripped = bits.strip()
            if stripped and set(stripped) - {"0", "1"}:
                raise ValueError("bit string may contain only 0 and 1: %r" % bits)
            self._value = int(stripped, 2) if stripped else 0
            self._length = len(stripped)
            return
        value = 0
        length = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1, got %r" % (b,))
            value = (value << 1) | b
            length += 1
        self._value = value
        self._length = length

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitString":
        """Bits of ``value`` (MSB first) zero-padded on the left to ``length``."""
        if value < 0 or length < 0 or value >> length:
            raise ValueError("value %d does not fit in %d bits" % (value, length))
        out = cls.__new__(cls)
        out._value = value
        out._length = length
        return out

    @property
    def value(self) -> int:
        return self._value

    def __len__(self) -> int:
        return self._length

    def __bool__(self) -> bool:
        return self._length > 0

    def __getitem__(self, index):
        if isinstance(index, slice):
            start, stop, step = index.indices(self._length)
            if step != 1:
                return BitString([self[i] for i in range(start, stop, step)])
            if stop <= start:
                return EMPTY
            width = stop - start
            chunk = (self._value >> (self._length - stop)) & ((1 << width) - 1)
            return BitString.from_int(chunk, width)
        if index < 0:
            index += self._length
        if not 0 <= index < self._length:
            raise IndexError("bit index out of range")
        return (self._value >> (self._length - 1 - index)) & 1

    def __iter__(self) -> Iterator[int]:
        v, n = self._value, self._length
        for shift in range(n - 1, -1, -1):
            yield (v >> shift) & 1

    def __add__(self, other: "BitString") -> "BitString":
        if not isinstance(other, BitString):
            return NotImplemented
        return BitString.from_int(
            (self._value << other._length) | other._value,
            self._length + other._length,
        )

    def append(self, bit: int) -> "BitString":
        if bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")
        return BitString.from_int((self._value << 1) | bit, self._length + 1)

    def __mul__(self, times: int) -> "BitString":
        if times < 0:
            raise ValueError("repeat count must be >= 0")
        out = 0
        for _ in range(times):
            out = (out << self._length) | self._value
        return BitString.from_int(out, self._length * times)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._value == other._value and self._length == other._length

    def __hash__(self) -> int:
        return hash((self._value, self._length))

    def __str__(self) -> str:
        return format(self._value, "0%db" % self._length) if self._length else ""

    def __repr__(self) -> str:
        return "BitString(%r)" % str(self)

    def count(self, bit: int) -> int:
        ones = bin(self._value).count("1")
        return ones if bit == 1 else self._length - ones

    def to_hex(self) -> str:
        """Hex packing, MSB first, last nibble zero-padded on the right."""
        if self._length == 0:
            return ""
        pad = -self._length % 4
        return format(self._value << pad, "0%dx" % ((self._length + pad) // 4))

    @classmethod
    def from_hex(cls, digits: str, length: "int | None" = None) -> "BitString":
        """Inverse of to_hex; length defaults to 4 bits per hex digit."""
        digits = digits.strip()
        nbits = 4 * len(digits)
        if length is None:
            length = nbits
        if not 0 <= nbits - length < 4:
            raise ValueError("length %d does not match %d hex digits" % (length, len(digits)))
        value = int(digits, 16) if digits else 0
        if value & ((1 << (nbits - length)) - 1):
            raise ValueError("nonzero padding bits in hex form")
        return cls.from_int(value >> (nbits - length), length)


EMPTY = BitString()


def concat(x: BitString, y: BitString) -> BitString:
    return x + y


def is_prefix(x: BitString, y: BitString) -> bool:
    """True iff x is a (not necessarily proper) prefix of y."""
    if len(x) > len(y):
        return False
    return y.value >> (len(y) - len(x)) == x.value


def pair(x: BitString, y: BitString) -> BitString:
    """Self-delimiting pairing: each bit of x doubled, then 01, then y.

    len(pair(x, y)) == 2*len(x) + len(y) + 2.
    """
    head = 0
    for b in x:
        head = (head << 2) | (3 if b else 0)
    head = (head << 2) | 1  # delimiter 01
    return BitString.from_int((head << len(y)) | y.value, 2 * len(x) + 2 + len(y))


def unpair(z: BitString) -> "tuple[BitString, BitString]":
    """Inverse of pair; raises DecodeError when no decomposition exists."""
    xbits = []
    i = 0
    n = len(z)
    while True:
        if i + 2 > n:
            raise DecodeError("string ends before the 01 delimiter")
        a, b = z[i], z[i + 1]
        i += 2
        if a == b:
            xbits.append(a)
        elif a == 0:  # 01 delimiter
            return BitString(xbits), z[i:]
        else:
            raise DecodeError("digram 10 at offset %d" % (i - 2))
