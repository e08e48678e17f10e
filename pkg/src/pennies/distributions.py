"""Distribution-relative regularity with exact rational probabilities.

A string distribution assigns each finite string a nonnegative rational
such that the empty string gets 1 and prob(x) = prob(x0) + prob(x1); read
prefix-wise that is a probability measure on infinite bit sequences.  A
detector paired with a distribution only counts outputs that are strictly
less probable than their inputs, and the regularity level climbs in
doublings of that probability ratio instead of saved bits.  Under the
uniform distribution both notions coincide with the plain length-based
sigma.

Everything here is exact Fraction arithmetic; the mass bounds are sharp
inequalities and floating point would blur them at the margins.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, List, Optional, Tuple

from .bits import BitString
from .detectors import (
    DEFAULT_FUEL,
    LEVEL_SET_BOUND,
    Budget,
    BudgetExceeded,
    Detector,
    RegularityReport,
    all_inputs,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class InvalidParameter(ValueError):
    """A distribution parameter outside its allowed range."""


class StringDistribution:
    """Exact probability assignment to finite strings."""

    def __init__(self, name: str, prob: Callable[[BitString], Fraction]):
        self.name = name
        self._prob = prob

    def prob(self, x: BitString) -> Fraction:
        return self._prob(x)

    def __repr__(self) -> str:
        return "StringDistribution(%r)" % self.name


def _parse_rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameter("bad rational %r" % text) from exc
    if not ZERO <= value <= ONE:
        raise InvalidParameter("parameter %s outside [0, 1]" % value)
    return value


def uniform_distribution() -> StringDistribution:
    return StringDistribution("uniform", lambda x: Fraction(1, 1 << len(x)))


def bernoulli_distribution(theta: Fraction) -> StringDistribution:
    if not ZERO <= theta <= ONE:
        raise InvalidParameter("parameter %s outside [0, 1]" % theta)

    def prob(x: BitString) -> Fraction:
        ones = x.count(1)
        return theta**ones * (ONE - theta) ** (len(x) - ones)

    return StringDistribution("bernoulli:%s" % theta, prob)


def markov_distribution(rows: Tuple[Fraction, ...]) -> StringDistribution:
    """Two-state chain: rows = (t00, t01, t10, t11), started in state 0."""
    if len(rows) != 4:
        raise InvalidParameter("markov needs four transition rationals")
    for t in rows:
        if not ZERO <= t <= ONE:
            raise InvalidParameter("parameter %s outside [0, 1]" % t)
    if rows[0] + rows[1] != ONE or rows[2] + rows[3] != ONE:
        raise InvalidParameter("markov rows must each sum to 1")
    table = ((rows[0], rows[1]), (rows[2], rows[3]))

    def prob(x: BitString) -> Fraction:
        p = ONE
        state = 0
        for b in x:
            p *= table[state][b]
            state = b
        return p

    name = "markov:%s" % ",".join(str(t) for t in rows)
    return StringDistribution(name, prob)


def make_distribution(kind: str) -> StringDistribution:
    """Build a distribution from its textual form.

    Accepted: "uniform", "bernoulli:<rational>", and
    "markov:t00,t01,t10,t11" with exact rational transition entries.
    """
    if kind == "uniform":
        return uniform_distribution()
    if kind.startswith("bernoulli:"):
        return bernoulli_distribution(_parse_rational(kind[len("bernoulli:") :]))
    if kind.startswith("markov:"):
        parts = kind[len("markov:") :].split(",")
        return markov_distribution(tuple(_parse_rational(p) for p in parts))
    raise InvalidParameter("unknown distribution %r" % kind)


def check_distribution(
    P: StringDistribution, max_len: int
) -> List[Tuple[BitString, Fraction, Fraction]]:
    """Verify the two laws on every string up to max_len.

    Each violation is (x, got, required): the root law pins prob of the
    empty string to 1, the additivity law pins prob(x) to the sum over its
    one-bit extensions.  An empty list certifies both laws exactly.
    """
    violations = []
    root = P.prob(BitString())
    if root != ONE:
        violations.append((BitString(), root, ONE))
    for x in all_inputs(max_len):
        got = P.prob(x)
        required = P.prob(x.append(0)) + P.prob(x.append(1))
        if got != required:
            violations.append((x, got, required))
    return violations


class PDetector:
    """A detector weighted by a distribution.

    The base map is filtered by the probability-drop law: an input whose
    output is not strictly less probable becomes undefined.  Levels then
    require a witness both short enough and probable enough.
    """

    def __init__(self, base: Detector, distribution: StringDistribution):
        self.base = base
        self.distribution = distribution
        self.name = "%s@%s" % (base.name, distribution.name)

    def evaluate(self, x: BitString, fuel: int = DEFAULT_FUEL) -> Optional[BitString]:
        y = self.base.evaluate(x, fuel)
        if y is None:
            return None
        if not self.distribution.prob(x) > self.distribution.prob(y):
            return None
        return y

    def __repr__(self) -> str:
        return "PDetector(%r)" % self.name


def _prob_level(px: Fraction, py: Fraction, cap: int) -> int:
    """Largest m <= cap with px >= 2^m * py, or -1 when even m = 0 fails."""
    if py == ZERO:
        return cap
    if px < py:
        return -1
    m = 0
    bound = py
    while m < cap and px >= bound * 2:
        bound *= 2
        m += 1
    return m


def p_sigma_exact(
    d: PDetector,
    y: BitString,
    fuel: int = DEFAULT_FUEL,
    budget: Budget = Budget(),
) -> RegularityReport:
    """Exact distribution-relative sigma by exhausting the witness set.

    A witness realizes level m when it maps to y, saves at least m bits of
    length, and is at least 2^m times as probable; the report carries the
    best such m.  Witness enumeration follows the base detector: its
    grammar when declared, otherwise brute force under the budget bound.
    """
    base = d.base
    if base.witness_candidates is not None:
        witnesses = base.witness_candidates(y)
    elif len(y) <= budget.brute_len:
        witnesses = all_inputs(len(y) - 1)
    else:
        raise BudgetExceeded(
            "brute-force sigma needs 2^%d evaluations; bound is length %d"
            % (len(y), budget.brute_len)
        )
    py = d.distribution.prob(y)
    best_sigma = 0
    best_witness = None
    for x in witnesses:
        cap = len(y) - len(x)
        if cap <= best_sigma:
            continue
        if d.evaluate(x, fuel) != y:
            continue
        m = _prob_level(d.distribution.prob(x), py, cap)
        if m > best_sigma:
            best_sigma, best_witness = m, x
    return RegularityReport(y, d.name, best_sigma, best_witness, True, budget)


def p_level_set_mass(
    d: PDetector,
    n: int,
    m: int,
    fuel: int = DEFAULT_FUEL,
    max_n: int = LEVEL_SET_BOUND,
) -> Fraction:
    """Exact probability mass of the length-n strings regular at level m.

    Enumerates witnesses of length <= n - m, keeps outputs passing the
    probability conjunct, and sums their probabilities.  The level-m mass
    can never exceed 2^-m, which is what makes a high observed level a
    significance statement under the distribution.
    """
    if n > max_n:
        raise BudgetExceeded("mass enumeration bound is n <= %d" % max_n)
    if m < 0:
        raise ValueError("level must be >= 0")
    if m > n:
        return ZERO
    dist = d.distribution
    scale = 1 << m
    members = set()
    for x in all_inputs(n - m):
        y = d.evaluate(x, fuel)
        if y is None or len(y) != n or y in members:
            continue
        if dist.prob(x) >= scale * dist.prob(y):
            members.add(y)
    return sum((dist.prob(y) for y in members), ZERO)
