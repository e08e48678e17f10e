"""Live human-vs-machine sessions with a commit-then-reveal fairness protocol.

The machine's move for each round is chosen and committed (as a SHA-256
hash) before the client's move for that round is accepted, then revealed
together with the nonce so the client can check the machine did not peek.
Every session appends its protocol records to a line-delimited log under
a state directory; the log alone lets an offline auditor re-verify every
reveal against the commitment that preceded it.

Payloads are field:value lines over HTTP, with identical frames on the
WebSocket stream.  In the persisted log each record is one line of
space-separated field:value pairs, so records parse with the same
splitter the wire uses.
"""

from __future__ import annotations

import hashlib
import os
import threading
from typing import Optional

from .arena import TESTER_BUDGET, TesterStrategy, payoff
from .bank import BANK_NAMES, bank
from .bits import BitString
from .detectors import SIGNIFICANCE_THRESHOLD
from .rng import SplitMix64

MAX_ROUNDS = 10**4
MAX_SESSIONS = 256
DEFAULT_ROUND_LIMIT = 256

INDEX_FILE = "index"


class ServiceError(RuntimeError):
    """Base protocol error; name and status reach the client."""

    status = 400

    @property
    def name(self) -> str:
        return type(self).__name__


class BadRequest(ServiceError):
    status = 400


class InvalidConfig(ServiceError):
    status = 400


class UnknownSession(ServiceError):
    status = 404


class RoundMismatch(ServiceError):
    status = 409


class SessionComplete(ServiceError):
    status = 410


# ---------------------------------------------------------------- codec

def _check_token(text: str) -> str:
    if not text or any(c in ":\n\r\t " for c in text):
        raise ValueError("field token not wire-safe: %r" % text)
    return text


def encode_frame(fields: dict) -> str:
    """One field:value pair per line, in insertion order."""
    lines = []
    for key, value in fields.items():
        lines.append("%s:%s" % (_check_token(key), _check_token(str(value))))
    return "\n".join(lines) + "\n"


def decode_frame(text: str) -> dict:
    """Inverse of encode_frame; also splits one-line space-joined records."""
    fields: dict = {}
    for chunk in text.replace(" ", "\n").splitlines():
        if not chunk:
            continue
        key, sep, value = chunk.partition(":")
        if not sep:
            raise BadRequest("malformed field %r" % chunk)
        fields[key] = value
    return fields


def encode_record(fields: dict) -> str:
    """A frame flattened to a single space-separated log line."""
    return encode_frame(fields).rstrip("\n").replace("\n", " ") + "\n"


# ---------------------------------------------------------------- protocol

def commitment_hash(move: int, nonce: bytes) -> str:
    """SHA-256 over the move character followed by the nonce in lowercase hex."""
    if move not in (0, 1):
        raise ValueError("move must be 0 or 1")
    if len(nonce) != 16:
        raise ValueError("nonce must be 16 bytes")
    digest = hashlib.sha256()
    digest.update(b"1" if move else b"0")
    digest.update(nonce.hex().encode("ascii"))
    return digest.hexdigest()


def _parse_bit(text: str, what: str) -> int:
    if text not in ("0", "1"):
        raise BadRequest("%s must be 0 or 1, got %r" % (what, text))
    return int(text)


def _parse_natural(text: str, what: str) -> int:
    if not text.isdigit():
        raise BadRequest("%s must be a natural number, got %r" % (what, text))
    return int(text)


class SessionConfig:
    def __init__(
        self,
        threshold: int = SIGNIFICANCE_THRESHOLD,
        limit: int = DEFAULT_ROUND_LIMIT,
        bank_names: tuple = BANK_NAMES,
        seed: Optional[int] = None,
    ):
        if threshold < 1:
            raise InvalidConfig("threshold must be >= 1")
        if not 1 <= limit <= MAX_ROUNDS:
            raise InvalidConfig("round limit must be in 1..%d" % MAX_ROUNDS)
        names = tuple(bank_names)
        if not names or any(n not in BANK_NAMES for n in names):
            raise InvalidConfig("bank must name detectors from %s" % (BANK_NAMES,))
        self.threshold = threshold
        self.limit = limit
        self.bank_names = names
        self.seed = seed

    @classmethod
    def from_fields(cls, fields: dict) -> "SessionConfig":
        kwargs: dict = {}
        if "threshold" in fields:
            kwargs["threshold"] = _parse_natural(fields["threshold"], "threshold")
        if "limit" in fields:
            kwargs["limit"] = _parse_natural(fields["limit"], "limit")
        if "bank" in fields:
            kwargs["bank_names"] = tuple(
                n for n in fields["bank"].split(",") if n
            )
        if "seed" in fields:
            kwargs["seed"] = _parse_natural(fields["seed"], "seed")
        return cls(**kwargs)


class Session:
    """One live match; the machine holds Alice's seat."""

    def __init__(self, sid: str, config: SessionConfig, seed: int):
        self.id = sid
        self.config = config
        self.seed = seed
        master = SplitMix64(seed)
        self._alice_rng = master.split(1)
        self._nonce_rng = master.split(3)
        self.alice = TesterStrategy(config.threshold, TESTER_BUDGET, matcher=True)
        self.alice.detectors = [
            d for d in bank() if d.name in config.bank_names
        ]
        self.alice_history = BitString()
        self.human_history = BitString()
        self.round = 1
        self.score = 0
        self.complete = False
        self.pending_move: Optional[int] = None
        self.pending_nonce: Optional[bytes] = None
        self.pending_hash: Optional[str] = None
        self.responses: dict = {}
        self.events: list = []
        self.lock = threading.Lock()

    @property
    def mode(self) -> str:
        return self.alice.state.mode

    def _draw_nonce(self) -> bytes:
        words = self._nonce_rng.next_word(), self._nonce_rng.next_word()
        return b"".join(w.to_bytes(8, "big") for w in words)

    def commit_current(self) -> dict:
        """Choose and commit Alice's move for the current round."""
        move = self.alice.next_move(
            self.alice_history, self.human_history, self._alice_rng
        )
        nonce = self._draw_nonce()
        self.pending_move = move
        self.pending_nonce = nonce
        self.pending_hash = commitment_hash(move, nonce)
        return {"type": "commit", "round": self.round, "hash": self.pending_hash}

    def apply_move(self, move: int):
        """Resolve the current round; returns (response frame, log records)."""
        alice_move = self.pending_move
        nonce = self.pending_nonce
        gain = payoff(alice_move, move)
        self.score += gain
        self.alice.observe(move, gain)
        self.alice_history = self.alice_history.append(alice_move)
        self.human_history = self.human_history.append(move)
        played = self.round
        records = [{"type": "move", "round": played, "move": move}]

        self.round += 1
        diag: dict = {}
        if self.round > self.config.limit:
            self.complete = True
            self.pending_move = None
            self.pending_nonce = None
            self.pending_hash = None
        else:
            records.append(self.commit_current())
            diag = self.alice._diag

        fields = {
            "type": "reveal",
            "round": played,
            "alice": alice_move,
            "nonce": nonce.hex(),
            "payoff": gain,
            "score": self.score,
            "mode": self.mode,
        }
        if "triggered_detector" in diag:
            fields["triggered_detector"] = diag["triggered_detector"]
            fields["sigma"] = diag["sigma"]
        records.insert(1, dict(fields))

        response = dict(fields)
        del response["type"]
        if self.complete:
            response["complete"] = 1
            records.append(
                {"type": "complete", "rounds": played, "score": self.score}
            )
        else:
            response["commitment"] = self.pending_hash
        frame = encode_frame(response)
        self.responses[played] = (move, frame)
        self.events.append((played, frame))
        if "sigmas" in diag:
            dfields = {"type": "diagnostics", "round": played, "mode": self.mode}
            for name in self.config.bank_names:
                dfields["sigma_" + name] = diag["sigmas"].get(name, 0)
            self.events.append((played, encode_frame(dfields)))
        return frame, records

    def snapshot_frame(self) -> str:
        fields = {
            "id": self.id,
            "round": self.round,
            "score": self.score,
            "mode": self.mode,
            "complete": 1 if self.complete else 0,
            "threshold": self.config.threshold,
            "limit": self.config.limit,
            "bank": ",".join(self.config.bank_names),
        }
        if self.pending_hash is not None:
            fields["commitment"] = self.pending_hash
        return encode_frame(fields)


# ---------------------------------------------------------------- storage

class LogStore:
    """Append-only session logs plus an id -> file index."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)
        self.index_path = os.path.join(root, INDEX_FILE)

    def _log_path(self, sid: str) -> str:
        return os.path.join(self.root, sid + ".log")

    def _private_path(self, sid: str) -> str:
        return os.path.join(self.root, sid + ".private")

    def register(self, sid: str, private: dict):
        with open(self.index_path, "a", encoding="ascii") as fh:
            fh.write(encode_record({"id": sid, "file": sid + ".log"}))
        with open(self._private_path(sid), "w", encoding="ascii") as fh:
            fh.write(encode_record(private))
        open(self._log_path(sid), "a", encoding="ascii").close()

    def append(self, sid: str, records: list):
        with open(self._log_path(sid), "a", encoding="ascii") as fh:
            for record in records:
                fh.write(encode_record(record))

    def read_log(self, sid: str) -> str:
        with open(self._log_path(sid), "r", encoding="ascii") as fh:
            return fh.read()

    def read_private(self, sid: str) -> dict:
        with open(self._private_path(sid), "r", encoding="ascii") as fh:
            return decode_frame(fh.read())

    def session_ids(self) -> list:
        if not os.path.exists(self.index_path):
            return []
        ids = []
        with open(self.index_path, "r", encoding="ascii") as fh:
            for line in fh:
                if line.strip():
                    ids.append(decode_frame(line)["id"])
        return ids


# ---------------------------------------------------------------- service

class PenniesService:
    """Session table, persistence, and recovery; transport-agnostic."""

    def __init__(self, state_dir: str, seed: Optional[int] = None):
        self.store = LogStore(state_dir)
        self.sessions: dict = {}
        if seed is None:
            seed = int.from_bytes(os.urandom(8), "big")
        self._rng = SplitMix64(seed)
        self._lock = threading.Lock()
        self._recover()

    # -- lifecycle

    def _active_count(self) -> int:
        return sum(1 for s in self.sessions.values() if not s.complete)

    def _fresh_id(self) -> str:
        while True:
            sid = "%016x%016x" % (self._rng.next_word(), self._rng.next_word())
            if sid not in self.sessions:
                return sid

    def create_session(self, fields: dict) -> str:
        config = SessionConfig.from_fields(fields)
        with self._lock:
            if self._active_count() >= MAX_SESSIONS:
                raise InvalidConfig(
                    "server is at its %d-session capacity" % MAX_SESSIONS
                )
            sid = self._fresh_id()
            seed = (
                config.seed
                if config.seed is not None
                else self._rng.next_word()
            )
            session = Session(sid, config, seed)
            self.sessions[sid] = session
        self.store.register(
            sid,
            {
                "id": sid,
                "seed": seed,
                "threshold": config.threshold,
                "limit": config.limit,
                "bank": ",".join(config.bank_names),
            },
        )
        created = {
            "type": "created",
            "id": sid,
            "threshold": config.threshold,
            "limit": config.limit,
            "bank": ",".join(config.bank_names),
        }
        commit = session.commit_current()
        self.store.append(sid, [created, commit])
        return encode_frame(
            {
                "id": sid,
                "round": session.round,
                "commitment": session.pending_hash,
                "threshold": config.threshold,
                "limit": config.limit,
                "bank": ",".join(config.bank_names),
            }
        )

    def _recover(self):
        for sid in self.store.session_ids():
            private = self.store.read_private(sid)
            config = SessionConfig(
                threshold=int(private["threshold"]),
                limit=int(private["limit"]),
                bank_names=tuple(private["bank"].split(",")),
            )
            session = Session(sid, config, int(private["seed"]))
            session.commit_current()
            last_hash = session.pending_hash
            for line in self.store.read_log(sid).splitlines():
                record = decode_frame(line)
                kind = record.get("type")
                if kind == "move":
                    session.apply_move(_parse_bit(record["move"], "move"))
                    last_hash = session.pending_hash
                elif kind == "commit":
                    if record["hash"] != last_hash:
                        raise RuntimeError(
                            "state directory corrupt: commitment for session "
                            "%s round %s does not replay" % (sid, record["round"])
                        )
            self.sessions[sid] = session

    # -- request handlers

    def _session(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise UnknownSession("no session %r" % sid)
        return session

    def submit_move(self, sid: str, fields: dict) -> str:
        session = self._session(sid)
        if "round" not in fields or "move" not in fields:
            raise BadRequest("a move needs round and move fields")
        round_ = _parse_natural(fields["round"], "round")
        move = _parse_bit(fields["move"], "move")
        with session.lock:
            if round_ in session.responses:
                prior_move, frame = session.responses[round_]
                if prior_move == move:
                    return frame
                raise RoundMismatch(
                    "round %d was already played with a different move" % round_
                )
            if session.complete:
                raise SessionComplete("session %s is over" % sid)
            if round_ != session.round:
                raise RoundMismatch(
                    "expected round %d, got %d" % (session.round, round_)
                )
            frame, records = session.apply_move(move)
            self.store.append(sid, records)
            return frame

    def snapshot(self, sid: str) -> str:
        session = self._session(sid)
        with session.lock:
            return session.snapshot_frame()

    def log_bytes(self, sid: str) -> bytes:
        self._session(sid)
        return self.store.read_log(sid).encode("ascii")

    def events_after(self, sid: str, last_seen: int) -> list:
        session = self._session(sid)
        return [frame for rnd, frame in session.events if rnd > last_seen]

    def event_count(self, sid: str) -> int:
        return len(self._session(sid).events)

    def is_complete(self, sid: str) -> bool:
        return self._session(sid).complete


# ---------------------------------------------------------------- audit

def audit_records(text: str) -> dict:
    """Offline commitment audit over one session's log text.

    Checks, for every revealed round: a commitment was logged before the
    client's move arrived, and the revealed (move, nonce) re-hashes to
    exactly the committed hash.  Works from the log alone.
    """
    commits: dict = {}
    moves: dict = {}
    reveals = 0
    verified = 0
    mismatches: list = []
    for position, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        record = decode_frame(line)
        kind = record.get("type")
        if kind == "commit":
            commits[int(record["round"])] = (record["hash"], position)
        elif kind == "move":
            moves[int(record["round"])] = position
        elif kind == "reveal":
            reveals += 1
            round_ = int(record["round"])
            entry = commits.get(round_)
            move_pos = moves.get(round_)
            ok = entry is not None and move_pos is not None
            if ok:
                committed, commit_pos = entry
                ok = commit_pos < move_pos < position
                if ok:
                    nonce = bytes.fromhex(record["nonce"])
                    ok = (
                        commitment_hash(int(record["alice"]), nonce) == committed
                    )
            if ok:
                verified += 1
            else:
                mismatches.append(round_)
    return {
        "reveals": reveals,
        "verified": verified,
        "mismatches": mismatches,
        "ok": reveals == verified and not mismatches,
    }


