"""Hand-compiled machine programs for the per, cnt and xoralt detectors.

The machine has no subtraction and no subroutines, so everything here is
built from a few idioms:

  drain       LOOP INC .. INC END: repeatedly bump the source until it
              wraps to zero, bumping destinations along the way; the net
              effect is dst -= src with src cleared (mod 256)
  once        a loop whose body runs at most once because it clears the
              tested cell; a zero cell skips in a couple of steps
  hang        LOOP END over a nonzero cell never terminates, which is how
              off-domain inputs are made undefined

A drain iterates 256 - v times no matter how small v is, so the dominant
cost of a cell test is the loop body itself.  To keep those loops tight,
multi-bit numbers live in zones of stride-2 cells: data at even offsets
with a private scratch cell right next to each data cell.  Draining into
the neighbour costs two head moves per iteration instead of a round trip
to a distant scratch bank, which makes these interpreters run in a few
thousand steps per processed bit instead of hundreds of thousands.

Zone cells code bit 0 as value 1 and bit 1 as value 2, so 0 marks unused
cells and scans skip them in a few steps.  Zones hold 15 bits, so pattern
lengths, repeat counts and numerals are supported below 2^15; longer
inputs overflow a zone and hang, which keeps the programs honest
(undefined) rather than silently wrong.  READ stores 2 once the input is
exhausted, letting the parsers detect end of stream.

Each builder returns a program that agrees with its native detector on
every input within the capacity bound, including off-domain inputs, where
both are undefined.

Flag discipline: a branch body nested inside if_else(..., flag=X) must
never touch X, so call sites hand out F, F2, F3 outermost to innermost.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Dict, Optional

from .vm import END, INC, LEFT, LOOP, OUT0, OUT1, READ, RIGHT, VmProgram

ZONE = 15  # bits per number zone; capacity 2^15
STRIDE = 2


class Asm:
    """Tracks the head position statically so cells are plain integers."""

    def __init__(self):
        self.ops: list = []
        self.pos = 0

    def to(self, cell: int):
        delta = cell - self.pos
        if delta > 0:
            self.ops.extend([RIGHT] * delta)
        elif delta < 0:
            self.ops.extend([LEFT] * -delta)
        self.pos = cell

    def read(self, cell: int):
        self.to(cell)
        self.ops.append(READ)

    def out(self, bit: int):
        self.ops.append(OUT1 if bit else OUT0)

    def inc(self, cell: int, n: int = 1):
        self.to(cell)
        self.ops.extend([INC] * n)

    @contextmanager
    def loop(self, cell: int):
        self.to(cell)
        self.ops.append(LOOP)
        yield
        self.to(cell)
        self.ops.append(END)

    def clear(self, cell: int):
        with self.loop(cell):
            self.inc(cell)

    def hang_if(self, cell: int):
        """Undefined if and only if the cell is nonzero."""
        self.to(cell)
        self.ops.extend([LOOP, END])

    def drain(self, src: int, dsts: Optional[Dict[int, int]] = None):
        """dst -= mult * src for each destination; src ends at 0."""
        with self.loop(src):
            self.inc(src)
            for dst, mult in (dsts or {}).items():
                self.inc(dst, mult)

    def move(self, src: int, dst: int, via: int):
        """dst += src, src cleared; via must be a zero cell."""
        self.drain(src, {via: 1})
        self.drain(via, {dst: 1})

    def once(self, cell: int, body):
        """Run body iff cell is nonzero, then clear it; body may use it."""
        with self.loop(cell):
            body()
            self.clear(cell)

    def if_else(self, cell: int, then, els, flag: int):
        """Branch on the cell, consuming it; flag must be a zero cell."""
        self.inc(flag)

        def _then():
            then()
            self.clear(flag)

        self.once(cell, _then)
        self.once(flag, els)

    def program(self) -> VmProgram:
        return VmProgram.from_ops(self.ops)


def _nop():
    pass


# ---------------------------------------------------------------------------
# scratch-cell conventions shared by the builders


class _Frame:
    def __init__(self, a: Asm):
        self.a = a
        # the read cluster: READ lands in P, the test drain spills into the
        # two neighbours, so end-of-stream detection never leaves the cluster
        self.P = 0
        self.PA = 1  # becomes 2 - v: zero exactly at end of input
        self.PB = 2  # becomes 1 - v: zero exactly for bit 1
        self.P2 = 3  # surviving 0/1 copy of the bit
        self.T2 = 4  # set when the stream had ended
        self.F = 5  # branch flags, outermost to innermost
        self.F2 = 6
        self.F3 = 7
        self.HF = 8  # hang flag: validations bump it, hang_if fires it
        self.next_free = 9

    def alloc(self, n: int = 1) -> int:
        cell = self.next_free
        self.next_free += n
        return cell

    def alloc_zone(self) -> int:
        base = self.next_free
        self.next_free += ZONE * STRIDE
        return base

    def read_classified(self):
        """READ one symbol; afterwards T2 = 1 at end of stream, else
        P2 holds the bit.  P, PA, PB are left clear."""
        a = self.a
        f = self
        a.read(f.P)
        a.drain(f.P, {f.PA: 1, f.PB: 1})  # both get -v
        a.inc(f.PA, 2)  # 2 - v: {0: 2, 1: 1, end: 0}
        a.inc(f.PB, 1)  # 1 - v: {0: 1, 1: 0, end: 255}

        def stream_live():
            # PB nonzero means bit 0 and it is consumed by the branch;
            # PB zero means bit 1
            a.if_else(f.PB, _nop, lambda: a.inc(f.P2), f.F2)

        def stream_done():
            a.clear(f.PB)  # one step: PB holds 255 here
            a.inc(f.T2)

        a.if_else(f.PA, stream_live, stream_done, f.F)

    def hang_if_ended(self):
        a = self.a
        a.once(self.T2, lambda: a.inc(self.HF))
        a.hang_if(self.HF)

    def emit_from(self, cell: int, flag: int):
        """Emit the bit held in `cell` (0 or 1), consuming it."""
        a = self.a
        a.if_else(cell, lambda: a.out(1), lambda: a.out(0), flag)


# ---------------------------------------------------------------------------
# zone operations (data at base + 2i, scratch at base + 2i + 1)


def _zcell(zone: int, i: int) -> int:
    return zone + STRIDE * i


def _zshift(f: _Frame, zone: int):
    """Shift a zone one slot up, freeing the base; hang on overflow."""
    a = f.a
    a.hang_if(_zcell(zone, ZONE - 1))
    for i in range(ZONE - 2, -1, -1):
        cell = _zcell(zone, i)
        a.drain(cell, {cell + 1: 1})  # scratch = -v
        a.drain(cell + 1, {cell + STRIDE: 1})  # next += v


def _zdeposit(f: _Frame, zone: int, flag: int, src: Optional[int] = None):
    """Store the bit from src (default P2) at the zone base, coded 1/2;
    consumes the source cell."""
    a = f.a
    base = _zcell(zone, 0)
    a.inc(base)
    a.if_else(f.P2 if src is None else src, lambda: a.inc(base), _nop, flag)


def _zcase(f: _Frame, cell: int, empty, bit0, bit1, flag_a: int, flag_b: int):
    """Three-way branch on a zone cell, consuming it.

    The branches run with the cell cleared; bit0/bit1 are expected to
    rebuild it (value 1 or 2) when the number should survive.
    """
    a = f.a
    adj = cell + 1
    a.drain(cell, {adj: 1})  # adj = -v, cell = 0
    a.inc(adj)  # {empty: 1, bit 0: 0, bit 1: 255}

    def then():
        # adj is 1 (empty) or 255 (bit 1)
        a.inc(adj)  # {empty: 2, bit 1: 0}
        a.if_else(adj, empty, bit1, flag_b)

    a.if_else(adj, then, bit0, flag_a)


def _zdec(f: _Frame, zone: int, borrow: int, rearm: int, uf: int):
    """Decrement a zone in place; set uf when it was zero (underflow).

    Cells are visited least significant first with a borrow that starts
    armed: bit 1 becomes bit 0 and stops, bit 0 becomes bit 1 and carries,
    an empty cell means the borrow ran off the top.  On underflow the zone
    is left garbage, which callers treat as terminal.
    """
    a = f.a
    a.inc(borrow)
    for i in range(ZONE):
        cell = _zcell(zone, i)

        def body(cell=cell):
            def was_zero():
                a.inc(cell, 2)  # bit 0 -> bit 1, borrow continues
                a.inc(rearm)

            def was_one():
                a.inc(cell, 1)  # bit 1 -> bit 0, borrow resolved

            _zcase(f, cell, lambda: a.inc(uf), was_zero, was_one, f.F2, f.F3)

        a.once(borrow, body)
        a.once(rearm, lambda: a.inc(borrow))
    a.once(borrow, lambda: a.inc(uf))


def _zinc(f: _Frame, zone: int, carry: int, rearm: int):
    """Binary increment of a zone, growing into the first empty cell."""
    a = f.a
    a.inc(carry)
    for i in range(ZONE):
        cell = _zcell(zone, i)

        def body(cell=cell):
            def was_zero():
                a.inc(cell, 2)  # bit 0 + carry = bit 1, done

            def was_one():
                a.inc(cell, 1)  # bit 1 + carry = bit 0, carry on
                a.inc(rearm)

            def empty():
                a.inc(cell, 2)  # fresh most significant bit

            _zcase(f, cell, empty, was_zero, was_one, f.F2, f.F3)

        a.once(carry, body)
        a.once(rearm, lambda: a.inc(carry))
    a.hang_if(carry)  # capacity overflow: a 16-bit number


# ---------------------------------------------------------------------------
# the three programs


def per_program() -> VmProgram:
    """pair(p, k) -> p repeated k times, with the expansion guard.

    Capacity: len(p) and the repeat-count numeral up to 15 bits each.
    """
    asm = Asm()
    f = _Frame(asm)
    A = f.alloc()  # first bit of a digram
    PV = f.alloc()  # surviving copy of the second digram bit
    DEP = f.alloc()  # deposit-pattern-bit flag
    DID = f.alloc()  # a bit was emitted in this position
    LX = f.alloc()  # input length counter
    LENP = f.alloc()  # pattern length (only for nonemptiness)
    KBITS = f.alloc()  # count-numeral length
    FIRSTK = f.alloc()  # leading count bit still pending validation
    RUNP = f.alloc()
    RUNK = f.alloc()
    RUN = f.alloc()
    UF = f.alloc()
    BW = f.alloc()
    RB = f.alloc()
    EPR = f.alloc(2)  # expansion countdown -(len(x)+1), plus its scratch
    KZ = f.alloc_zone()  # repeat count
    PZ = f.alloc_zone()  # the pattern

    # -------- pattern phase: digrams until the 01 delimiter
    asm.inc(RUNP)
    with asm.loop(RUNP):
        f.read_classified()
        f.hang_if_ended()  # stream may not end inside a digram
        asm.inc(LX)
        asm.move(f.P2, A, via=f.PA)
        f.read_classified()
        f.hang_if_ended()
        asm.inc(LX)
        # duplicate the second bit: branching consumes P2, PV feeds deposits
        asm.drain(f.P2, {f.PA: 1})
        asm.drain(f.PA, {f.P2: 1, PV: 1})

        def a_one():
            # 11 -> pattern bit 1; 10 -> not a pairing
            asm.if_else(f.P2, lambda: asm.inc(DEP), lambda: asm.inc(f.HF), f.F2)

        def a_zero():
            # 01 -> delimiter; 00 -> pattern bit 0
            asm.if_else(
                f.P2,
                lambda: (asm.clear(RUNP), asm.clear(PV)),
                lambda: asm.inc(DEP),
                f.F2,
            )

        asm.if_else(A, a_one, a_zero, f.F)
        asm.hang_if(f.HF)

        def deposit():
            _zshift(f, PZ)
            _zdeposit(f, PZ, f.F, src=PV)
            asm.inc(LENP)

        asm.once(DEP, deposit)
    asm.if_else(LENP, _nop, lambda: asm.inc(f.HF), f.F)  # p must be nonempty
    asm.hang_if(f.HF)

    # -------- count phase: numeral bits until end of input
    asm.inc(RUNK)
    asm.inc(FIRSTK)
    with asm.loop(RUNK):
        f.read_classified()

        def got_bit():
            def first_bit():
                # a leading zero is not a numeral; duplicate the bit so
                # the branch test does not consume it
                asm.drain(f.P2, {f.PA: 1, f.PB: 1})
                asm.drain(f.PA, {f.P2: 1})
                asm.if_else(f.PB, _nop, lambda: asm.inc(f.HF), f.F2)
                asm.hang_if(f.HF)

            asm.once(FIRSTK, first_bit)
            _zshift(f, KZ)
            _zdeposit(f, KZ, f.F2)
            asm.inc(KBITS)
            asm.inc(LX)

        asm.if_else(f.T2, lambda: asm.clear(RUNK), got_bit, f.F)
    asm.if_else(KBITS, _nop, lambda: asm.inc(f.HF), f.F)  # count required
    asm.hang_if(f.HF)

    # expansion countdown: emitted output must exceed len(x)
    asm.inc(LX)
    asm.drain(LX, {EPR: 1})  # EPR = -(len(x)+1)

    # -------- emission: repeat the pattern, counting k down to zero
    asm.inc(RUN)
    with asm.loop(RUN):
        _zdec(f, KZ, borrow=BW, rearm=RB, uf=UF)

        def emit_pass():
            for i in range(ZONE - 1, -1, -1):
                cell = _zcell(PZ, i)

                def bit0(cell=cell):
                    asm.inc(cell, 1)
                    asm.out(0)
                    asm.inc(DID)

                def bit1(cell=cell):
                    asm.inc(cell, 2)
                    asm.out(1)
                    asm.inc(DID)

                _zcase(f, cell, _nop, bit0, bit1, f.F2, f.F3)

                def tick():
                    # one emitted bit against the expansion target
                    asm.drain(EPR, {EPR + 1: 1})

                    def live():
                        asm.drain(EPR + 1, {EPR: 1})
                        asm.inc(EPR)

                    asm.once(EPR + 1, live)

                asm.once(DID, tick)

        asm.if_else(UF, lambda: asm.clear(RUN), emit_pass, f.F)
    asm.hang_if(EPR)  # nonzero: emitted at most len(x) bits, no expansion
    return asm.program()


def cnt_program() -> VmProgram:
    """Binary numeral of n -> first n bits of the counting stream.

    Capacity: numerals up to 15 bits, so n < 2^15.
    """
    asm = Asm()
    f = _Frame(asm)
    LX = f.alloc()
    C1 = f.alloc()  # fanned-out copies of the input length
    C2 = f.alloc()
    C3 = f.alloc()
    FIRSTN = f.alloc()
    RUNR = f.alloc()
    RUN = f.alloc()
    UF = f.alloc()
    BW = f.alloc()
    RB = f.alloc()
    GO = f.alloc()
    BITF = f.alloc()  # parked bit while the countdown runs
    NZ = f.alloc_zone()  # how many stream bits remain
    KZ = f.alloc_zone()  # the numeral currently being emitted

    # -------- read the numeral into NZ (shifting makes it LSB-first)
    asm.inc(RUNR)
    asm.inc(FIRSTN)
    with asm.loop(RUNR):
        f.read_classified()

        def got_bit():
            def first_bit():
                # leading zeros are rejected; keep the bit across the test
                asm.drain(f.P2, {f.PA: 1, f.PB: 1})
                asm.drain(f.PA, {f.P2: 1})
                asm.if_else(f.PB, _nop, lambda: asm.inc(f.HF), f.F2)
                asm.hang_if(f.HF)

            asm.once(FIRSTN, first_bit)
            _zshift(f, NZ)
            _zdeposit(f, NZ, f.F2)
            asm.inc(LX)

        asm.if_else(f.T2, lambda: asm.clear(RUNR), got_bit, f.F)

    # length checks from one fan-out: nonempty; expansion needs n > len(x),
    # which holds always for len >= 3, never for len 1, and for len 2
    # exactly when the numeral is 11
    asm.drain(LX, {C1: 1, C2: 1, C3: 1})  # each -len
    asm.if_else(C1, _nop, lambda: asm.inc(f.HF), f.F)
    asm.hang_if(f.HF)
    asm.inc(C2)  # zero iff len == 1
    asm.if_else(C2, _nop, lambda: asm.inc(f.HF), f.F)
    asm.hang_if(f.HF)
    asm.inc(C3, 2)  # zero iff len == 2

    def check_three():
        # len == 2: both numeral cells must hold bit 1 (value 2)
        for i in (0, 1):
            cell = _zcell(NZ, i)

            def bit0(cell=cell):
                asm.inc(cell, 1)
                asm.inc(f.HF)

            def bit1(cell=cell):
                asm.inc(cell, 2)

            _zcase(f, cell, lambda: asm.inc(f.HF), bit0, bit1, f.F2, f.F3)

    asm.if_else(C3, _nop, check_three, f.F)
    asm.hang_if(f.HF)

    # -------- numeral 0 contributes the single stream bit "0"
    _zdec(f, NZ, borrow=BW, rearm=RB, uf=UF)
    asm.once(UF, lambda: asm.inc(f.HF))  # unreachable: n >= 3
    asm.hang_if(f.HF)
    asm.out(0)

    # -------- numerals 1, 2, 3, ... emitted most significant bit first
    asm.inc(RUN)
    with asm.loop(RUN):
        _zinc(f, KZ, carry=BW, rearm=RB)
        for i in range(ZONE - 1, -1, -1):
            cell = _zcell(KZ, i)

            def bit0(cell=cell):
                asm.inc(cell, 1)
                asm.inc(GO)

            def bit1(cell=cell):
                asm.inc(cell, 2)
                asm.inc(GO)
                asm.inc(BITF)

            _zcase(f, cell, _nop, bit0, bit1, f.F2, f.F3)

            def spend(i=i):
                # pay one stream bit; emit unless the count ran out
                _zdec(f, NZ, borrow=BW, rearm=RB, uf=UF)

                def aborted(i=i):
                    asm.clear(RUN)
                    asm.clear(BITF)
                    for j in range(i):
                        asm.clear(_zcell(KZ, j))  # later cells then skip

                def emit():
                    f.emit_from(BITF, f.F2)

                asm.if_else(UF, aborted, emit, f.F)

            asm.once(GO, spend)
    return asm.program()


def xoralt_program() -> VmProgram:
    """pair(mask bit, payload) -> alternation from the mask interleaved
    with the payload; payloads shorter than 5 bits are rejected."""
    asm = Asm()
    f = _Frame(asm)
    A = f.alloc()
    M = f.alloc(2)  # the mask bit, with its test scratch beside it

    RUN = f.alloc()

    def emit_alt(parity: int):
        asm.drain(M, {M + 1: 1})  # scratch = -m

        def m_one():
            asm.drain(M + 1, {M: 1})  # restore the mask bit
            asm.out(0 if parity else 1)

        def m_zero():
            asm.out(1 if parity else 0)

        asm.if_else(M + 1, m_one, m_zero, f.F2)

    # -------- mask digram: 00 or 11; 01 means an empty mask, 10 no pairing
    f.read_classified()
    f.hang_if_ended()
    asm.move(f.P2, A, via=f.PA)
    f.read_classified()
    f.hang_if_ended()
    asm.if_else(
        A,
        lambda: asm.if_else(f.P2, lambda: asm.inc(M), lambda: asm.inc(f.HF), f.F2),
        lambda: asm.if_else(f.P2, lambda: asm.inc(f.HF), _nop, f.F2),
        f.F,
    )
    asm.hang_if(f.HF)

    # -------- delimiter digram: exactly 01
    f.read_classified()
    f.hang_if_ended()
    asm.move(f.P2, A, via=f.PA)
    f.read_classified()
    f.hang_if_ended()
    asm.if_else(
        A,
        lambda: asm.inc(f.HF),
        lambda: asm.if_else(f.P2, _nop, lambda: asm.inc(f.HF), f.F2),
        f.F,
    )
    asm.hang_if(f.HF)

    # -------- first five payload bits are mandatory (expansion guard)
    for i in range(5):
        f.read_classified()
        f.hang_if_ended()
        emit_alt(i % 2)
        f.emit_from(f.P2, f.F3)

    # -------- remaining payload bits two at a time until end of input
    asm.inc(RUN)
    with asm.loop(RUN):
        for parity in (1, 0):
            f.read_classified()

            def got_bit(parity=parity):
                emit_alt(parity)
                f.emit_from(f.P2, f.F3)

            asm.if_else(f.T2, lambda: asm.clear(RUN), got_bit, f.F)
    return asm.program()


_CACHE: Dict[str, VmProgram] = {}


def compiled(name: str) -> VmProgram:
    if name not in _CACHE:
        builder = {"per": per_program, "cnt": cnt_program, "xoralt": xoralt_program}
        _CACHE[name] = builder[name]()
    return _CACHE[name]
