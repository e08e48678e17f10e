"""A tiny bit-coded machine used as the program language for universality.

Programs are bit strings, three bits per instruction, over a right-infinite
tape of byte cells (wraparound at 256) with a single head starting at cell
0.  Output is an append-only bit stream; input is a read-once bit stream.

    OUT0/OUT1  emit a bit (the opcode's low bit is the emitted value)
    READ       consume the next input bit into the current cell; when the
               input is exhausted the cell is set to 2 instead, so programs
               can detect end of input (0 and 1 never collide with it)
    INC        current cell := cell + 1 mod 256
    RIGHT/LEFT move the head; LEFT at cell 0 makes the run undefined
    LOOP/END   while-loop bracket pair: LOOP skips past its END when the
               cell is 0, END jumps back after its LOOP when the cell is
               nonzero

A run halts by executing past the final instruction; HALT is accepted by
the assembler as a pseudo-instruction that emits no code.  Code whose bit
length is not a multiple of 3 or whose brackets do not match is an encoding
error: such a program is undefined on every input.  Fuel counts executed
instructions; exhausting it leaves the result undefined at that fuel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

from .bits import BitString

OUT0, OUT1, READ, INC, RIGHT, LEFT, LOOP, END = range(8)
MNEMONICS = ("OUT0", "OUT1", "READ", "INC", "RIGHT", "LEFT", "LOOP", "END")
_BY_NAME = {name: op for op, name in enumerate(MNEMONICS)}

# cell value stored by READ once the input runs out
INPUT_END = 2

# run statuses
HALTED = "halt"
FUEL_OUT = "fuel"
UNDEFINED = "undefined"  # provably never halts cleanly (encoding error,
#                          LEFT at the origin, empty loop on a nonzero cell)
KILLED = "killed"  # target-relative: output already deviates from target


def _match_brackets(ops: Sequence[int]) -> Optional[dict]:
    match = {}
    stack = []
    for i, op in enumerate(ops):
        if op == LOOP:
            stack.append(i)
        elif op == END:
            if not stack:
                return None
            j = stack.pop()
            match[i] = j
            match[j] = i
    if stack:
        return None
    return match


class VmProgram:
    """Code plus its decode; invalid code is kept but undefined everywhere."""

    __slots__ = ("code", "ops", "match")

    def __init__(self, code: BitString):
        self.code = code
        self.ops: Optional[Tuple[int, ...]] = None
        self.match: Optional[dict] = None
        if len(code) % 3 == 0:
            ops = tuple(
                (code[i] << 2) | (code[i + 1] << 1) | code[i + 2]
                for i in range(0, len(code), 3)
            )
            match = _match_brackets(ops)
            if match is not None:
                self.ops = ops
                self.match = match

    @property
    def valid(self) -> bool:
        return self.ops is not None

    @classmethod
    def from_ops(cls, ops: Sequence[int]) -> "VmProgram":
        bits = []
        for op in ops:
            if not 0 <= op <= 7:
                raise ValueError("opcode out of range: %r" % op)
            bits.extend(((op >> 2) & 1, (op >> 1) & 1, op & 1))
        return cls(BitString(bits))

    @classmethod
    def from_text(cls, text: str) -> "VmProgram":
        """Assemble whitespace-separated mnemonics; HALT emits nothing."""
        ops = []
        for token in text.split():
            name = token.upper()
            if name == "HALT":
                continue
            if name not in _BY_NAME:
                raise ValueError("unknown instruction %r" % token)
            ops.append(_BY_NAME[name])
        return cls.from_ops(ops)

    @classmethod
    def from_hex(cls, digits: str) -> "VmProgram":
        return cls(BitString.from_hex(digits))

    def packed_hex(self) -> str:
        """Hex form of the code, padded with RIGHT so nibbles come out even."""
        if not self.valid:
            raise ValueError("cannot pack invalid code")
        ops = list(self.ops)
        while (3 * len(ops)) % 4:
            ops.append(RIGHT)
        return VmProgram.from_ops(ops).code.to_hex()

    def disassemble(self) -> str:
        if not self.valid:
            return "<invalid>"
        return " ".join(MNEMONICS[op] for op in self.ops)

    def __len__(self) -> int:
        return len(self.code)

    def __repr__(self) -> str:
        if self.valid and len(self.ops) <= 16:
            return "VmProgram(%s)" % self.disassemble()
        return "VmProgram(%d bits%s)" % (len(self.code), "" if self.valid else ", invalid")


@dataclass
class VmOutcome:
    status: str
    output: Optional[BitString]  # set only on halt
    emitted: list  # bits emitted so far, any status
    fuel_used: int


def _run(
    ops: Sequence[int],
    match: dict,
    inp: Sequence[int],
    fuel: int,
    target: Optional[Sequence[int]] = None,
):
    """Core interpreter; returns (status, emitted bit list, fuel used).

    With a target, the run is killed as soon as the output can no longer
    equal it (wrong bit or too long), which is what the dovetailer needs.
    """
    tape = bytearray(32)
    head = 0
    pc = 0
    ipos = 0
    ilen = len(inp)
    out = []
    olen = 0
    tlen = len(target) if target is not None else -1
    n_ops = len(ops)
    used = 0
    while pc < n_ops:
        if used >= fuel:
            return FUEL_OUT, out, used
        used += 1
        op = ops[pc]
        if op < 2:  # OUT0 / OUT1
            if target is not None and (olen >= tlen or target[olen] != op):
                return KILLED, out, used
            out.append(op)
            olen += 1
            pc += 1
        elif op == READ:
            if ipos < ilen:
                tape[head] = inp[ipos]
                ipos += 1
            else:
                tape[head] = INPUT_END
            pc += 1
        elif op == INC:
            tape[head] = (tape[head] + 1) & 255
            pc += 1
        elif op == RIGHT:
            head += 1
            if head == len(tape):
                tape.extend(bytes(len(tape)))
            pc += 1
        elif op == LEFT:
            if head == 0:
                return UNDEFINED, out, used
            head -= 1
            pc += 1
        elif op == LOOP:
            if tape[head]:
                if match[pc] == pc + 1:
                    return UNDEFINED, out, used  # empty body can never exit
                pc += 1
            else:
                pc = match[pc] + 1
        else:  # END
            pc = match[pc] + 1 if tape[head] else pc + 1
    return HALTED, out, used


def _coerce(program: Union[VmProgram, BitString]) -> VmProgram:
    if isinstance(program, VmProgram):
        return program
    return VmProgram(program)


def vm_run(
    program: Union[VmProgram, BitString],
    x: BitString,
    fuel: int,
    target: Optional[BitString] = None,
) -> VmOutcome:
    p = _coerce(program)
    if not p.valid:
        return VmOutcome(UNDEFINED, None, [], 0)
    status, out, used = _run(
        p.ops,
        p.match,
        tuple(x),
        fuel,
        tuple(target) if target is not None else None,
    )
    output = BitString(out) if status == HALTED else None
    return VmOutcome(status, output, out, used)


def vm_eval(
    program: Union[VmProgram, BitString], x: BitString, fuel: int
) -> Optional[BitString]:
    """The machine as a partial map: the emitted string on a clean halt."""
    outcome = vm_run(program, x, fuel)
    return outcome.output
