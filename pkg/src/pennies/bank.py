"""The stock detector bank: per, cnt, lz78, xoralt.

Each entry is a Detector instance whose evaluator is a total function
returning None off-domain.  All four are predictive (a defined witness can
always be extended so the output grows) and all four expose an encoder.
per, cnt and xoralt also declare witness-candidate grammars, so sigma is
exact for them at any subject length; lz78 sigma is exact only within the
brute-force bound and lower-bounded by the compressor elsewhere.
"""

from __future__ import annotations

from typing import Iterator, Optional

from .bits import BitString, DecodeError, pair, unpair
from .detectors import Detector

BANK_NAMES = ("per", "cnt", "lz78", "xoralt")


def _numeral(k: int) -> BitString:
    """Plain binary numeral of k >= 1, no leading zeros."""
    return BitString(bin(k)[2:])


def _parse_numeral(bits: BitString) -> Optional[int]:
    if len(bits) == 0 or bits[0] == 0:
        return None
    return bits.value


# ---------------------------------------------------------------- per

def _per_evaluate(x: BitString, fuel: int) -> Optional[BitString]:
    try:
        p, k_bits = unpair(x)
    except DecodeError:
        return None
    if len(p) == 0:
        return None
    k = _parse_numeral(k_bits)
    if k is None:
        return None
    n_out = k * len(p)
    if n_out <= len(x) or n_out > fuel:
        return None
    return p * k


def _per_candidates(y: BitString) -> Iterator[BitString]:
    # every defined input mapping to y is pair(q, numeral(n/d)) for a
    # divisor d of n = len(y) with q = y[:d] actually repeating; the
    # repetition test compares the length-(n-d) prefix and suffix as
    # integers, which keeps long subjects cheap
    n = len(y)
    v = y.value
    for d in range(1, n // 2 + 1):
        if n % d == 0:
            if (v >> d) == (v & ((1 << (n - d)) - 1)):
                yield pair(y[:d], _numeral(n // d))


def _per_encoder(y: BitString) -> Optional[BitString]:
    best = None
    for x in _per_candidates(y):
        if best is None or len(x) < len(best):
            best = x
    if best is None or len(best) >= len(y):
        return None
    return best


h_per = Detector(
    "per",
    _per_evaluate,
    predictive=True,
    encoder=_per_encoder,
    witness_candidates=_per_candidates,
)


# ---------------------------------------------------------------- cnt

_COUNT_BITS: list = []
_COUNT_NEXT = [0]


def counting_stream(n: int) -> BitString:
    """First n bits of the stream of concatenated numerals 0, 1, 10, 11, ..."""
    while len(_COUNT_BITS) < n:
        _COUNT_BITS.extend(int(c) for c in bin(_COUNT_NEXT[0])[2:])
        _COUNT_NEXT[0] += 1
    return BitString(_COUNT_BITS[:n])


def counting_bit(i: int) -> int:
    """Bit i of the counting stream without building a prefix string."""
    while len(_COUNT_BITS) <= i:
        _COUNT_BITS.extend(int(c) for c in bin(_COUNT_NEXT[0])[2:])
        _COUNT_NEXT[0] += 1
    return _COUNT_BITS[i]


def _cnt_evaluate(x: BitString, fuel: int) -> Optional[BitString]:
    n = _parse_numeral(x)
    if n is None:
        return None
    if n <= len(x) or n > fuel:
        return None
    return counting_stream(n)


def _cnt_candidates(y: BitString) -> Iterator[BitString]:
    if len(y) >= 1:
        yield _numeral(len(y))


def _cnt_encoder(y: BitString) -> Optional[BitString]:
    n = len(y)
    if n < 3 or counting_stream(n) != y:
        return None
    return _numeral(n)


h_cnt = Detector(
    "cnt",
    _cnt_evaluate,
    predictive=True,
    encoder=_cnt_encoder,
    witness_candidates=_cnt_candidates,
)


# ---------------------------------------------------------------- lz78

def _token_width(t: int) -> int:
    """Index width of the t-th token: minimal binary for dictionary size t."""
    return (t - 1).bit_length()


def _lz_evaluate(x: BitString, fuel: int) -> Optional[BitString]:
    """Decode a token stream.

    The t-th token is an index into the current dictionary (phrase 0 is
    empty, width grows with the dictionary) followed by one literal bit,
    and contributes phrase[index] + literal.  A final token may consist of
    an index alone when the stream ends exactly after it.
    """
    n = len(x)
    i = 0
    t = 1
    phrases = [BitString()]
    out = BitString()
    while i < n:
        w = _token_width(t)
        if i + w > n:
            return None
        idx = x[i : i + w].value if w else 0
        if idx >= t:
            return None
        if i + w == n:
            out = out + phrases[idx]
            i = n
            break
        phrase = phrases[idx].append(x[i + w])
        phrases.append(phrase)
        out = out + phrase
        i += w + 1
        t += 1
        if len(out) > fuel:
            return None
    if len(out) <= n:
        return None
    return out


def lz_encode(y: BitString) -> BitString:
    """Greedy LZ78 parse of y rendered as a token stream (no expansion check)."""
    children: dict = {}
    node = 0
    next_id = 1
    tokens = []
    for b in y:
        key = (node, b)
        if key in children:
            node = children[key]
        else:
            tokens.append((node, b))
            children[key] = next_id
            next_id += 1
            node = 0
    if node:
        tokens.append((node, None))
    bits: list = []
    for t, (idx, lit) in enumerate(tokens, start=1):
        w = _token_width(t)
        if w:
            bits.extend(int(c) for c in format(idx, "0%db" % w))
        if lit is not None:
            bits.append(lit)
    return BitString(bits)


def _lz_encoder(y: BitString) -> Optional[BitString]:
    x = lz_encode(y)
    if len(x) >= len(y):
        return None
    return x


class Lz78Encoder:
    """Incremental greedy compressor for online compressed-length tracking.

    Feeding the bits of y one at a time keeps encoded_length() equal to
    len(lz_encode(y)) at every step, in O(1) amortized per bit.
    """

    def __init__(self):
        self._children: dict = {}
        self._node = 0
        self._next_id = 1
        self._bits = 0
        self._tokens = 0

    def push(self, bit: int):
        key = (self._node, bit)
        if key in self._children:
            self._node = self._children[key]
        else:
            self._bits += _token_width(self._tokens + 1) + 1
            self._children[key] = self._next_id
            self._next_id += 1
            self._tokens += 1
            self._node = 0

    def encoded_length(self) -> int:
        if self._node:
            return self._bits + _token_width(self._tokens + 1)
        return self._bits


h_lz = Detector(
    "lz78",
    _lz_evaluate,
    predictive=True,
    encoder=_lz_encoder,
)


# ---------------------------------------------------------------- xoralt

def _xoralt_evaluate(x: BitString, fuel: int) -> Optional[BitString]:
    try:
        mask, payload = unpair(x)
    except DecodeError:
        return None
    # mask is a single phase bit; payload must be long enough to expand
    if len(mask) != 1 or len(payload) < 5:
        return None
    if 2 * len(payload) > fuel:
        return None
    phase = mask[0]
    bits = []
    for i, b in enumerate(payload):
        bits.append(phase ^ (i & 1))
        bits.append(b)
    return BitString(bits)


def _xoralt_candidates(y: BitString) -> Iterator[BitString]:
    n = len(y)
    if n % 2 == 0 and n >= 10:
        yield pair(BitString([y[0]]), y[1::2])


def _xoralt_encoder(y: BitString) -> Optional[BitString]:
    n = len(y)
    if n % 2 or n < 10:
        return None
    phase = y[0]
    for i in range(0, n, 2):
        if y[i] != phase ^ ((i // 2) & 1):
            return None
    return pair(BitString([phase]), y[1::2])


h_xor_alt = Detector(
    "xoralt",
    _xoralt_evaluate,
    predictive=True,
    encoder=_xoralt_encoder,
    witness_candidates=_xoralt_candidates,
)


# ---------------------------------------------------------------- registry

_BANK = {"per": h_per, "cnt": h_cnt, "lz78": h_lz, "xoralt": h_xor_alt}


def bank() -> list:
    return [_BANK[name] for name in BANK_NAMES]


def get_detector(name: str) -> Detector:
    """Resolve a detector name: a bank entry or "vm:<hex-program>"."""
    if name in _BANK:
        return _BANK[name]
    if name.startswith("vm:"):
        from .universal import vm_detector

        return vm_detector(name[3:])
    raise ValueError("unknown detector %r" % name)
