"""Universality on top of the machine: guarded evaluation and dovetailing.

universal_eval treats a string w as a pairing of (program, input), runs the
machine, and keeps the result only when it strictly expands w; that guard
alone makes the universal map a detector.  dovetail_sigma searches for the
best universal witness of a subject inside a closed frontier box (program
bits, input bits, fuel per run), enumerating only well-formed programs and
killing runs the moment their output deviates from the subject.

The frontier defaults are sized for interactive use; they are configurable
upward until the enumeration estimate exceeds a documented work cap.
Anything beyond raises BudgetExceeded rather than silently running for
hours.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator, Optional, Tuple

from .bits import BitString, DecodeError, pair, unpair
from .detectors import Detector, BudgetExceeded
from .vm import (
    END,
    HALTED,
    LOOP,
    VmProgram,
    _match_brackets,
    _run,
    vm_eval,
)

# frontier hard caps and the total-run estimate cap
MAX_PROGRAM_BITS = 24
MAX_INPUT_BITS = 16
MAX_FUEL = 1 << 20
WORK_CAP = 2 * 10**7


@dataclass(frozen=True)
class Frontier:
    """Closed search box: programs, inputs, and fuel per run."""

    program_bits: int = 18
    input_bits: int = 4
    fuel: int = 2048

    def contains(self, other: "Frontier") -> bool:
        return (
            self.program_bits >= other.program_bits
            and self.input_bits >= other.input_bits
            and self.fuel >= other.fuel
        )


@dataclass(frozen=True)
class UniversalReport:
    subject: BitString
    sigma_u: int
    witness: Optional[BitString]
    fuel_spent: int
    frontier: Frontier

    def __post_init__(self):
        if self.witness is not None:
            got = universal_eval(self.witness, self.frontier.fuel)
            assert got == self.subject
            assert self.sigma_u == len(self.subject) - len(self.witness)


def universal_eval(w: BitString, fuel: int) -> Optional[BitString]:
    """Run w as pair(program, input); defined only when output expands w."""
    try:
        code, x = unpair(w)
    except DecodeError:
        return None
    y = vm_eval(VmProgram(code), x, fuel)
    if y is None or len(y) <= len(w):
        return None
    return y


def universal_detector() -> Detector:
    return Detector("universal", lambda x, fuel: universal_eval(x, fuel))


def vm_detector(hexdigits: str) -> Detector:
    """A fixed hex-packed program as a named detector with expansion guard."""
    program = VmProgram.from_hex(hexdigits)

    def evaluate(x: BitString, fuel: int) -> Optional[BitString]:
        y = vm_eval(program, x, fuel)
        if y is None or len(y) <= len(x):
            return None
        return y

    return Detector("vm:" + hexdigits.lower(), evaluate)


def domination_constant(p: VmProgram) -> int:
    """Level slack when moving a detector's witness to the universal one."""
    return 2 * len(p.code) + 2


class Unsupported(ValueError):
    """Requested a machine compilation that is not provided."""


def compile_bank_detector(name: str) -> VmProgram:
    """A program computing the named bank detector, input conventions and
    expansion guard included; undefined inputs make the program spin."""
    from . import vmprog

    builders = {
        "per": vmprog.per_program,
        "cnt": vmprog.cnt_program,
        "xoralt": vmprog.xoralt_program,
    }
    if name not in builders:
        raise Unsupported("no machine compilation for %r" % name)
    return builders[name]()


# ---------------------------------------------------------- enumeration

def valid_programs(n_ops: int) -> Iterator[Tuple[int, ...]]:
    """All op tuples of exactly n_ops with balanced brackets, code-lex order."""
    prefix: list = []

    def rec(depth: int, remaining: int):
        if remaining == 0:
            if depth == 0:
                yield tuple(prefix)
            return
        for op in range(8):
            if op == LOOP:
                if remaining - 1 < depth + 1:
                    continue
                new_depth = depth + 1
            elif op == END:
                if depth == 0:
                    continue
                new_depth = depth - 1
            else:
                if remaining - 1 < depth:
                    continue
                new_depth = depth
            prefix.append(op)
            yield from rec(new_depth, remaining - 1)
            prefix.pop()

    yield from rec(0, n_ops)


def count_valid_programs(n_ops: int) -> int:
    """Closed form: choose bracket slots, a balanced arrangement, free ops."""
    total = 0
    for b in range(n_ops // 2 + 1):
        catalan = comb(2 * b, b) // (b + 1)
        total += comb(n_ops, 2 * b) * catalan * 6 ** (n_ops - 2 * b)
    return total


def _work_estimate(n: int, frontier: Frontier) -> int:
    total = 0
    for n_ops in range(frontier.program_bits // 3 + 1):
        plen = 3 * n_ops
        if 2 * plen + 2 >= n:
            break
        max_x = min(frontier.input_bits, n - 2 * plen - 3)
        total += count_valid_programs(n_ops) * ((2 << max_x) - 1)
    return total


def _check_frontier(n: int, frontier: Frontier):
    if (
        frontier.program_bits > MAX_PROGRAM_BITS
        or frontier.input_bits > MAX_INPUT_BITS
        or frontier.fuel > MAX_FUEL
    ):
        raise BudgetExceeded(
            "frontier exceeds hard caps (%d program bits, %d input bits, fuel %d)"
            % (MAX_PROGRAM_BITS, MAX_INPUT_BITS, MAX_FUEL)
        )
    estimate = _work_estimate(n, frontier)
    if estimate > WORK_CAP:
        raise BudgetExceeded(
            "frontier implies ~%d runs, over the documented cap of %d"
            % (estimate, WORK_CAP)
        )


def dovetail_sigma(
    y: BitString,
    frontier: Frontier = Frontier(),
    resume_from: Optional[UniversalReport] = None,
) -> UniversalReport:
    """Best universal level for y within the frontier box.

    Every well-formed program of at most frontier.program_bits runs against
    every input of at most frontier.input_bits (skipping combinations the
    expansion guard already rules out) with the frontier's fuel.  The
    winner is the maximal level; among equal-level witnesses the
    lexicographically least pairing wins, so the result does not depend on
    traversal order and a resumed search equals a fresh one.

    resume_from must be a report for the same subject from a frontier
    contained in this one; its box is skipped when the fuel axis did not
    grow (larger fuel forces re-running, since old runs may have starved).
    """
    _check_frontier(len(y), frontier)
    n = len(y)
    target = tuple(y)

    best_level = 0
    best_w: Optional[BitString] = None
    fuel_spent = 0
    skip_p = skip_x = -1
    if resume_from is not None:
        if resume_from.subject != y:
            raise ValueError("resume report is for a different subject")
        if not frontier.contains(resume_from.frontier):
            raise ValueError("resume frontier is not contained in the new one")
        best_level = resume_from.sigma_u
        best_w = resume_from.witness
        fuel_spent = resume_from.fuel_spent
        if frontier.fuel == resume_from.frontier.fuel:
            skip_p = resume_from.frontier.program_bits
            skip_x = resume_from.frontier.input_bits

    for n_ops in range(frontier.program_bits // 3 + 1):
        plen = 3 * n_ops
        if 2 * plen + 2 >= n:
            break
        max_x = min(frontier.input_bits, n - 2 * plen - 3)
        for ops in valid_programs(n_ops):
            if not any(op < 2 for op in ops):
                continue
            match = _match_brackets(ops)
            code = None
            for xlen in range(max_x + 1):
                if plen <= skip_p and xlen <= skip_x:
                    continue
                for xv in range(1 << xlen):
                    x = tuple((xv >> (xlen - 1 - i)) & 1 for i in range(xlen))
                    status, out, used = _run(ops, match, x, frontier.fuel, target)
                    fuel_spent += used
                    if status != HALTED or len(out) != n:
                        continue
                    wlen = 2 * plen + 2 + xlen
                    level = n - wlen
                    if level < best_level:
                        continue
                    if code is None:
                        code = VmProgram.from_ops(ops).code
                    w = pair(code, BitString(x))
                    if (
                        level > best_level
                        or best_w is None
                        or w.value < best_w.value
                    ):
                        best_level = level
                        best_w = w
    return UniversalReport(y, best_level, best_w, fuel_spent, frontier)
