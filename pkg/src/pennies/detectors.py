"""Regularity detectors and the sigma calculus.

A detector is a partial map on finite binary strings that strictly expands:
whenever h(x) = y, len(x) < len(y).  A string y is regular at level m when
some input x with len(x) + m <= len(y) produces it; sigma(y) is the largest
such m.  Because at most 2^(n-m) strings of length n can be regular at level
m, sigma(y) >= M is a p <= 2^-M significance statement against the fair-coin
null, with no distributional modelling anywhere.

Detectors here are plain objects bundling the partial evaluator with
optional extras: an encoder (producing a candidate witness for y, giving
lower bounds on sigma), and a witness-candidate grammar (enumerating every
input that could map to y, giving exact sigma without brute force).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

from .bits import BitString, is_prefix

DEFAULT_FUEL = 10**6
# sigma >= 6 asserts p <= 2^-6, between the conventional 1% and 5% levels
SIGNIFICANCE_THRESHOLD = 6
# brute-force sigma enumerates all 2^len(y) shorter inputs; refuse above this
BRUTE_LEN_BOUND = 14
# level-set enumeration bound on len(y)
LEVEL_SET_BOUND = 14


class BudgetExceeded(RuntimeError):
    """An exhaustive operation was asked to run beyond its documented bound."""


class EncoderUnsound(RuntimeError):
    """An encoder produced a defined witness that maps to a different string."""


class NoExtension(RuntimeError):
    """No witness extension realizing the requested prediction horizon."""


@dataclass(frozen=True)
class Budget:
    fuel: int = DEFAULT_FUEL
    brute_len: int = BRUTE_LEN_BOUND
    max_extension_bits: int = 24


class Detector:
    """Named partial map with strict-expansion contract.

    evaluate(x, fuel) returns the output BitString or None (undefined at
    this fuel).  Evaluation is deterministic and monotone in fuel: once
    defined, larger fuel returns the same output.
    """

    def __init__(
        self,
        name: str,
        evaluate: Callable[[BitString, int], Optional[BitString]],
        *,
        predictive: bool = False,
        encoder: Optional[Callable[[BitString], Optional[BitString]]] = None,
        witness_candidates: Optional[Callable[[BitString], Iterable[BitString]]] = None,
    ):
        self.name = name
        self._evaluate = evaluate
        self.predictive = predictive
        self.encoder = encoder
        self.witness_candidates = witness_candidates

    def evaluate(self, x: BitString, fuel: int = DEFAULT_FUEL) -> Optional[BitString]:
        return self._evaluate(x, fuel)

    def __repr__(self) -> str:
        return "Detector(%r)" % self.name


@dataclass(frozen=True)
class RegularityReport:
    subject: BitString
    detector_name: str
    sigma: int
    witness: Optional[BitString]
    exact: bool
    budget: Budget = field(default_factory=Budget)

    def __post_init__(self):
        assert 0 <= self.sigma <= len(self.subject)
        assert (self.sigma == 0) == (self.witness is None)


@dataclass(frozen=True)
class SignificanceVerdict:
    threshold: int
    significant: bool
    report: RegularityReport

    def __post_init__(self):
        assert self.significant == (self.report.sigma >= self.threshold)


def all_inputs(max_len: int) -> Iterator[BitString]:
    """Every string of length <= max_len in length-then-lexicographic order."""
    for n in range(max_len + 1):
        for v in range(1 << n):
            yield BitString.from_int(v, n)


def check_expansion(d: Detector, max_len: int, fuel: int = DEFAULT_FUEL):
    """Return [(x, y)] for every defined input of length <= max_len with
    len(x) >= len(y); empty list means the expansion law holds there."""
    violations = []
    for x in all_inputs(max_len):
        y = d.evaluate(x, fuel)
        if y is not None and len(x) >= len(y):
            violations.append((x, y))
    return violations


def _report_from_witnesses(
    d: Detector,
    y: BitString,
    witnesses: Iterable[BitString],
    fuel: int,
    budget: Budget,
    exact: bool,
) -> RegularityReport:
    best_sigma = 0
    best_witness = None
    for x in witnesses:
        m = len(y) - len(x)
        if m > best_sigma and d.evaluate(x, fuel) == y:
            best_sigma, best_witness = m, x
    return RegularityReport(y, d.name, best_sigma, best_witness, exact, budget)


def sigma_exact(
    d: Detector, y: BitString, fuel: int = DEFAULT_FUEL, budget: Budget = Budget()
) -> RegularityReport:
    """Exact sigma by exhausting the witness set.

    With a declared witness-candidate grammar the enumeration is restricted
    to it (the evaluator rejects everything else, so nothing is missed) and
    works at any length.  Otherwise all inputs shorter than y are tried,
    which is refused above budget.brute_len.
    """
    if d.witness_candidates is not None:
        return _report_from_witnesses(
            d, y, d.witness_candidates(y), fuel, budget, exact=True
        )
    return sigma_brute(d, y, fuel, budget)


def sigma_brute(
    d: Detector, y: BitString, fuel: int = DEFAULT_FUEL, budget: Budget = Budget()
) -> RegularityReport:
    """Grammar-free oracle: try every x with len(x) < len(y)."""
    if len(y) > budget.brute_len:
        raise BudgetExceeded(
            "brute-force sigma needs 2^%d evaluations; bound is length %d"
            % (len(y), budget.brute_len)
        )
    return _report_from_witnesses(
        d, y, all_inputs(len(y) - 1), fuel, budget, exact=True
    )


def sigma_lower_bound(
    d: Detector, y: BitString, fuel: int = DEFAULT_FUEL, budget: Budget = Budget()
) -> RegularityReport:
    """Cheap one-witness bound via the detector's encoder."""
    if d.encoder is None:
        raise ValueError("detector %s has no encoder" % d.name)
    x = d.encoder(y)
    if x is None:
        return RegularityReport(y, d.name, 0, None, False, budget)
    out = d.evaluate(x, fuel)
    if out is None:
        return RegularityReport(y, d.name, 0, None, False, budget)
    if out != y:
        raise EncoderUnsound(
            "%s encoder witness maps to %r, not the subject" % (d.name, str(out))
        )
    m = len(y) - len(x)
    if m <= 0:
        return RegularityReport(y, d.name, 0, None, False, budget)
    return RegularityReport(y, d.name, m, x, False, budget)


def enumerate_level_set(
    d: Detector, n: int, m: int, fuel: int = DEFAULT_FUEL, max_n: int = LEVEL_SET_BOUND
):
    """The set of length-n strings regular at level m under d.

    Exhaustive over inputs of length <= n - m; refuses n above max_n.
    """
    if n > max_n:
        raise BudgetExceeded("level-set enumeration bound is n <= %d" % max_n)
    if m < 0:
        raise ValueError("level must be >= 0")
    if m > n:
        return set()
    out = set()
    for x in all_inputs(n - m):
        y = d.evaluate(x, fuel)
        if y is not None and len(y) == n:
            out.add(y)
    return out


def test_significance(
    d: Detector,
    y: BitString,
    threshold: int,
    budget: Budget = Budget(),
) -> SignificanceVerdict:
    """Sigma at the best feasible precision, compared against threshold.

    Order of preference: grammar-exact, brute-force-exact (short y), encoder
    lower bound.  A detector with none of these only ever reports sigma 0 on
    long subjects.
    """
    if threshold < 1:
        raise ValueError("significance threshold must be >= 1")
    if d.witness_candidates is not None or len(y) <= budget.brute_len:
        report = sigma_exact(d, y, budget.fuel, budget)
    elif d.encoder is not None:
        report = sigma_lower_bound(d, y, budget.fuel, budget)
    else:
        report = RegularityReport(y, d.name, 0, None, False, budget)
    return SignificanceVerdict(threshold, report.sigma >= threshold, report)


def _suffixes(length: int) -> Iterator[BitString]:
    for v in range(1 << length):
        yield BitString.from_int(v, length)


def extend_prediction(
    d: Detector,
    witness: BitString,
    history: BitString,
    horizon: int,
    fuel: int = DEFAULT_FUEL,
    budget: Budget = Budget(),
) -> BitString:
    """Bits len(history)+1 .. len(history)+horizon of some h(z), z => witness.

    Searches extensions of the witness in length-then-lexicographic order
    for one whose output strictly extends the whole history by at least the
    horizon.  Raises NoExtension when the search budget is exhausted.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if horizon == 0:
        return BitString()
    n = len(history)
    for ext_len in range(budget.max_extension_bits + 1):
        for suffix in _suffixes(ext_len):
            z = witness + suffix
            out = d.evaluate(z, fuel)
            if (
                out is not None
                and len(out) >= n + horizon
                and is_prefix(history, out)
            ):
                return out[n : n + horizon]
    raise NoExtension(
        "no extension of the witness within %d bits realizes horizon %d"
        % (budget.max_extension_bits, horizon)
    )


def predict_next(
    d: Detector,
    witness: BitString,
    y: BitString,
    horizon: int,
    fuel: int = DEFAULT_FUEL,
    budget: Budget = Budget(),
) -> BitString:
    """Predict the bits following y from a witness with h(witness) = y."""
    if not d.predictive:
        raise ValueError("detector %s is not predictive" % d.name)
    out = d.evaluate(witness, fuel)
    if out != y:
        raise ValueError("witness does not evaluate to the subject")
    return extend_prediction(d, witness, y, horizon, fuel, budget)
