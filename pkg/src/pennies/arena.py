"""Repeated matching-pennies play between a testing player and stock opponents.

Alice wins a round when the two moves are equal, Bob when they differ.
Alice's "tester" strategy watches Bob's move stream, runs the detector
bank on it at a fixed cadence, and once some detector reports sigma at or
above the significance threshold she switches from random play to
predicting Bob's next move from a witness.  A wrong prediction drops her
back to random play and raises the bar for the detector that failed.

Matches are pure functions of their arguments: every random draw comes
from a SplitMix64 stream seeded per match, so a (specs, rounds, seed,
threshold) tuple replays bit for bit.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Optional

from .bank import BANK_NAMES, Lz78Encoder, bank, counting_bit
from .bits import BitString
from .detectors import (
    Budget,
    NoExtension,
    SIGNIFICANCE_THRESHOLD,
    extend_prediction,
    predict_next,
    test_significance,
)
from .rng import SplitMix64

TESTING = "testing"
EXPLOITING = "exploiting"

# tests run every round early on, then are thinned out
CADENCE_DENSE_ROUNDS = 256
CADENCE_SPARSE_STEP = 16

# a detector that mispredicts must clear threshold + MISS_PENALTY to be
# picked again in the same match
MISS_PENALTY = 2

# how far ahead an exploiting Alice extends a witness in one search; the
# buffered bits are consumed one per round and agree with one-step
# prediction for every grammar detector
PREDICT_HORIZON = 64

# brute_len 0 keeps per-round testing on the grammar/encoder paths, and a
# short extension search bounds the worst-case cost of one prediction
TESTER_BUDGET = Budget(brute_len=0, max_extension_bits=12)


class ScriptExhausted(RuntimeError):
    """A scripted opponent was asked for more moves than its script holds."""


def payoff(alice_move: int, bob_move: int) -> int:
    """Alice's gain for one round; Bob's is the negation."""
    return 1 if alice_move == bob_move else -1


def _cadence(round_number: int) -> bool:
    if round_number <= CADENCE_DENSE_ROUNDS:
        return True
    return round_number % CADENCE_SPARSE_STEP == 0


# ---------------------------------------------------------------- trackers

class _StreamTrackers:
    """Cheap per-move statistics bounding each bank detector's sigma.

    The cadence consults these before paying for a full significance test.
    The per, cnt and xoralt figures are the exact grammar sigma and the
    lz78 figure is the exact encoder bound, so skipping a detector whose
    figure sits below threshold never changes which tests fire.
    """

    def __init__(self):
        self.bits: list = []
        self.fail: list = []
        self.value = 0
        self.count_ok = True
        self.alt_ok = True
        self.lz = Lz78Encoder()

    def push(self, bit: int):
        bits, fail = self.bits, self.fail
        n = len(bits)
        if n == 0:
            fail.append(0)
        else:
            k = fail[-1]
            while k and bits[k] != bit:
                k = fail[k - 1]
            fail.append(k + 1 if bits[k] == bit else 0)
        if self.count_ok and bit != counting_bit(n):
            self.count_ok = False
        if self.alt_ok and n % 2 == 0:
            if n and bit != bits[0] ^ ((n // 2) & 1):
                self.alt_ok = False
        bits.append(bit)
        self.value = (self.value << 1) | bit
        self.lz.push(bit)

    def smallest_period(self) -> int:
        return len(self.bits) - self.fail[-1] if self.bits else 0

    def _sigma_per(self) -> int:
        n = len(self.bits)
        p = self.smallest_period()
        if not 0 < 2 * p <= n:
            return 0
        v = self.value
        best = 0
        for d in range(p, n // 2 + 1):
            if n % d:
                continue
            if (v >> d) != (v & ((1 << (n - d)) - 1)):
                continue
            saved = n - (2 * d + (n // d).bit_length() + 2)
            if saved > best:
                best = saved
        return best

    def sigma_hint(self, name: str) -> int:
        n = len(self.bits)
        if name == "per":
            return self._sigma_per()
        if name == "cnt":
            if self.count_ok and n >= 3:
                return n - n.bit_length()
            return 0
        if name == "xoralt":
            if self.alt_ok and n >= 10 and n % 2 == 0:
                return n // 2 - 4
            return 0
        if name == "lz78":
            return max(0, n - self.lz.encoded_length())
        raise ValueError("no tracker for detector %r" % name)

    def snapshot(self) -> dict:
        return {name: self.sigma_hint(name) for name in BANK_NAMES}


# ---------------------------------------------------------------- state

class MatchState:
    """Everything one side's testing policy carries between rounds."""

    def __init__(self, threshold: int, rng_state: int = 0):
        if threshold < 1:
            raise ValueError("significance threshold must be >= 1")
        self.alice_history = BitString()
        self.bob_history = BitString()
        self.round = 0
        self.alice_score = 0
        self.mode = TESTING
        self.detector_name: Optional[str] = None
        self.witness: Optional[BitString] = None
        self.rng_state = rng_state & ((1 << 64) - 1)
        self.threshold = threshold
        # detector name -> extra sigma demanded after a missed prediction
        self.penalties: dict = {}
        self.trigger_round: Optional[int] = None
        self.trigger_sigma: Optional[int] = None
        self.trackers = _StreamTrackers()
        self._pending: list = []
        self._predicted: Optional[int] = None
        self._stalls = 0

    def draw_bit(self) -> int:
        gen = SplitMix64(self.rng_state)
        bit = gen.next_word() & 1
        self.rng_state = gen.state
        return bit


def _demote(state: MatchState, detector_name: str):
    state.mode = TESTING
    state.detector_name = None
    state.witness = None
    state._pending = []
    state._stalls = 0
    state.penalties[detector_name] = MISS_PENALTY


def observe_opponent(state: MatchState, move: int):
    """Feed the opponent's revealed move back into the policy state."""
    if (
        state.mode == EXPLOITING
        and state._predicted is not None
        and state._predicted != move
    ):
        _demote(state, state.detector_name)
    state._predicted = None
    state.trackers.push(move)


def _refresh_witness(state: MatchState, detector, budget: Budget):
    """A witness mapping to the current history, preferring a fresh one."""
    report = test_significance(detector, state.bob_history, 1, budget).report
    if report.witness is not None:
        return report.witness
    return state.witness


def _exploit_move(state: MatchState, detector, budget: Budget, diag: dict) -> int:
    if not state._pending:
        witness = _refresh_witness(state, detector, budget)
        try:
            ext = extend_prediction(
                detector,
                witness,
                state.bob_history,
                PREDICT_HORIZON,
                budget.fuel,
                budget,
            )
        except NoExtension:
            state._stalls += 1
            if state._stalls >= 2:
                _demote(state, detector.name)
            return state.draw_bit()
        state._stalls = 0
        state._pending = list(ext)
    bit = state._pending.pop(0)
    state._predicted = bit
    diag["predicted"] = bit
    return bit


def alice_policy(state: MatchState, detectors: list, budget: Budget = TESTER_BUDGET):
    """One move of the testing player; mutates state.

    Returns (move, mode, diagnostics).  Testing mode runs the bank at the
    cadence and otherwise plays a fair random bit; exploiting mode plays
    the predicted opponent move and keeps doing so until a miss.
    """
    diag: dict = {}
    if state.mode == EXPLOITING:
        named = {d.name: d for d in detectors}
        move = _exploit_move(state, named[state.detector_name], budget, diag)
        return move, state.mode, diag

    playing = state.round + 1
    if state.round > 0 and _cadence(playing):
        hints = state.trackers.snapshot()
        diag["sigmas"] = hints
        best = None
        for d in detectors:
            need = state.threshold + state.penalties.get(d.name, 0)
            if hints.get(d.name, 0) < need:
                continue
            verdict = test_significance(d, state.bob_history, need, budget)
            # replace the tracker's cheap upper bound with the tested value
            hints[d.name] = verdict.report.sigma
            if not verdict.significant:
                continue
            if best is None or verdict.report.sigma > best[0]:
                best = (verdict.report.sigma, d, verdict.report)
        if best is not None:
            sigma, detector, report = best
            state.mode = EXPLOITING
            state.detector_name = detector.name
            state.witness = report.witness
            state.trigger_round = playing
            state.trigger_sigma = sigma
            diag["triggered_detector"] = detector.name
            diag["sigma"] = sigma
            try:
                nxt = predict_next(
                    detector, report.witness, state.bob_history, 1,
                    budget.fuel, budget,
                )
            except NoExtension:
                return state.draw_bit(), state.mode, diag
            bit = nxt[0]
            try:
                ahead = extend_prediction(
                    detector, report.witness, state.bob_history,
                    PREDICT_HORIZON, budget.fuel, budget,
                )
                if ahead[0] == bit:
                    state._pending = list(ahead)[1:]
            except NoExtension:
                pass
            state._predicted = bit
            diag["predicted"] = bit
            return bit, state.mode, diag
    return state.draw_bit(), state.mode, diag


# ---------------------------------------------------------------- strategies

class Strategy:
    """A named move rule over (own history, opponent history, rng)."""

    def __init__(self, name, move_fn):
        self.name = name
        self._move = move_fn

    def next_move(self, own: BitString, opp: BitString, rng: SplitMix64) -> int:
        return self._move(own, opp, rng)

    def observe(self, opp_move: int, gain: int):
        pass

    def snapshot(self):
        return TESTING, {}


class TesterStrategy(Strategy):
    """The bank-driven player; works for either seat.

    A matcher (Alice's seat) plays the predicted opponent move, a
    mismatcher (Bob's seat) plays its negation.
    """

    def __init__(self, threshold: int, budget: Budget, matcher: bool = True):
        Strategy.__init__(self, "tester", None)
        self.state = MatchState(threshold)
        self.budget = budget
        self.matcher = matcher
        self.detectors = bank()
        self._seeded = False
        self._diag: dict = {}

    def next_move(self, own, opp, rng):
        st = self.state
        if not self._seeded:
            st.rng_state = rng.state
            self._seeded = True
        st.alice_history = own
        st.bob_history = opp
        st.round = len(own)
        move, _, diag = alice_policy(st, self.detectors, self.budget)
        self._diag = diag
        if not self.matcher and "predicted" in diag:
            move = 1 - move
        return move

    def observe(self, opp_move, gain):
        self.state.alice_score += gain
        observe_opponent(self.state, opp_move)

    def snapshot(self):
        return self.state.mode, self._diag


def _parse_probability(text: str) -> Fraction:
    try:
        p = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError("not a rational probability: %r" % text)
    if not 0 <= p <= 1:
        raise ValueError("probability out of range: %s" % text)
    return p


def _parse_pattern(text: str) -> BitString:
    if not text or any(c not in "01" for c in text):
        raise ValueError("pattern must be a nonempty string of 0s and 1s")
    return BitString(text)


def _human_move(own, opp, rng):
    raise RuntimeError("human moves arrive through a live session")


def make_strategy(
    spec: str,
    threshold: int = SIGNIFICANCE_THRESHOLD,
    budget: Budget = TESTER_BUDGET,
    matcher: bool = False,
) -> Strategy:
    """Build a strategy from its textual spec.

    Specs: random, tester, constant:<b>, periodic:<pattern>, counting,
    bernoulli:<a/b>, halfalt, script:<bits>, human.
    """
    kind, _, arg = spec.partition(":")
    if kind == "random":
        return Strategy("random", lambda own, opp, rng: rng.next_bit())
    if kind == "tester":
        return TesterStrategy(threshold, budget, matcher)
    if kind == "constant":
        if arg not in ("0", "1"):
            raise ValueError("constant strategy needs a bit, got %r" % arg)
        b = int(arg)
        return Strategy(spec, lambda own, opp, rng: b)
    if kind == "periodic":
        pattern = _parse_pattern(arg)
        return Strategy(spec, lambda own, opp, rng: pattern[len(own) % len(pattern)])
    if kind == "counting":
        return Strategy("counting", lambda own, opp, rng: counting_bit(len(own)))
    if kind == "bernoulli":
        p = _parse_probability(arg)
        return Strategy(spec, lambda own, opp, rng: rng.bernoulli(p))
    if kind == "halfalt":
        # 1-based even bits are random, 1-based odd bits alternate 0,1,0,...
        def halfalt(own, opp, rng):
            t = len(own)
            if t % 2:
                return rng.next_bit()
            return (t // 2) & 1

        return Strategy("halfalt", halfalt)
    if kind == "script":
        bits = _parse_pattern(arg)

        def scripted(own, opp, rng):
            t = len(own)
            if t >= len(bits):
                raise ScriptExhausted("script of %d moves used up" % len(bits))
            return bits[t]

        return Strategy(spec, scripted)
    if kind == "human":
        return Strategy("human", _human_move)
    raise ValueError("unknown strategy spec %r" % spec)


def bob_strategy(
    spec: str,
    threshold: int = SIGNIFICANCE_THRESHOLD,
    budget: Budget = TESTER_BUDGET,
) -> Strategy:
    """Bob's seat: a tester here plays to mismatch."""
    return make_strategy(spec, threshold, budget, matcher=False)


def alice_strategy(
    spec: str,
    threshold: int = SIGNIFICANCE_THRESHOLD,
    budget: Budget = TESTER_BUDGET,
) -> Strategy:
    """Alice's seat: a tester here plays to match."""
    return make_strategy(spec, threshold, budget, matcher=True)


# ---------------------------------------------------------------- engine

class MatchLog:
    """Per-round records plus a final summary, all JSON-serializable."""

    def __init__(self, records: list, summary: dict):
        self.records = records
        self.summary = summary

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(r, sort_keys=True, separators=(",", ":"))
            for r in self.records + [self.summary]
        ]
        return "\n".join(lines) + "\n"


def run_match(
    alice_spec: str,
    bob_spec: str,
    rounds: int,
    seed: int,
    threshold: int = SIGNIFICANCE_THRESHOLD,
    budget: Budget = TESTER_BUDGET,
    record_rounds: bool = True,
) -> MatchLog:
    """Play a full match; a pure function of its arguments.

    Both moves for a round are computed from histories through the
    previous round only, Alice's first.  A ScriptExhausted from either
    seat ends the match early with a truncated but well-formed log.
    """
    if rounds < 1:
        raise ValueError("a match needs at least one round")
    master = SplitMix64(seed)
    alice_rng = master.split(1)
    bob_rng = master.split(2)
    alice = alice_strategy(alice_spec, threshold, budget)
    bob = bob_strategy(bob_spec, threshold, budget)

    alice_hist = BitString()
    bob_hist = BitString()
    score = 0
    records: list = []
    first_exploit: Optional[int] = None
    mode = TESTING
    terminated = None
    played = 0

    for t in range(1, rounds + 1):
        try:
            a = alice.next_move(alice_hist, bob_hist, alice_rng)
            b = bob.next_move(bob_hist, alice_hist, bob_rng)
        except ScriptExhausted:
            terminated = "script exhausted"
            break
        gain = payoff(a, b)
        score += gain
        alice.observe(b, gain)
        bob.observe(a, -gain)
        alice_hist = alice_hist.append(a)
        bob_hist = bob_hist.append(b)
        played = t
        mode, diag = alice.snapshot()
        if first_exploit is None and mode == EXPLOITING:
            first_exploit = t
        if record_rounds:
            rec = {
                "round": t,
                "alice": a,
                "bob": b,
                "payoff": gain,
                "score": score,
                "mode": mode,
            }
            if "triggered_detector" in diag:
                rec["triggered_detector"] = diag["triggered_detector"]
                rec["sigma"] = diag["sigma"]
            records.append(rec)

    summary = {
        "alice": alice.name,
        "bob": bob.name,
        "rounds": played,
        "score": score,
        "mode": mode,
        "first_exploit_round": first_exploit,
    }
    if terminated is not None:
        summary["terminated"] = terminated
    return MatchLog(records, summary)


def tournament(
    alice_specs: list,
    bob_specs: list,
    rounds: int,
    seeds: list,
    threshold: int = SIGNIFICANCE_THRESHOLD,
    budget: Budget = TESTER_BUDGET,
) -> list:
    """Every Alice spec against every Bob spec over every seed.

    One summary row per pairing: score statistics across seeds, how many
    matches ever entered exploiting mode, and the mean first-detection
    round among those that did.
    """
    if not alice_specs or not bob_specs or not seeds:
        raise ValueError("tournament needs nonempty spec and seed lists")
    rows = []
    for a_spec in alice_specs:
        for b_spec in bob_specs:
            scores = []
            latencies = []
            terminated = 0
            for seed in seeds:
                log = run_match(
                    a_spec, b_spec, rounds, seed, threshold, budget,
                    record_rounds=False,
                )
                s = log.summary
                scores.append(s["score"])
                if s["first_exploit_round"] is not None:
                    latencies.append(s["first_exploit_round"])
                if "terminated" in s:
                    terminated += 1
            mean = sum(scores) / len(scores)
            variance = sum((x - mean) ** 2 for x in scores) / len(scores)
            row = {
                "alice": a_spec,
                "bob": b_spec,
                "rounds": rounds,
                "matches": len(seeds),
                "mean_score": mean,
                "min_score": min(scores),
                "max_score": max(scores),
                "score_stddev": math.sqrt(variance),
                "triggered": len(latencies),
                "mean_latency": (
                    sum(latencies) / len(latencies) if latencies else None
                ),
            }
            if terminated:
                row["terminated"] = terminated
            rows.append(row)
    return rows
