"""Session protocol, persistence, recovery, and the HTTP/WS surface."""

import hashlib

import pytest

from pennies.service import (
    BadRequest,
    InvalidConfig,
    MAX_ROUNDS,
    PenniesService,
    RoundMismatch,
    ServiceError,
    SessionComplete,
    SessionConfig,
    UnknownSession,
    audit_records,
    commitment_hash,
    decode_frame,
    encode_frame,
    encode_record,
)

from fastapi.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from pennies.http import build_app

SERVICE_SEED = 7
SESSION_SEED = 123
FIRST_SID = "63cbe1e459320dd7044c3cd7f43c661c"

# oracle for the 64-round alternating session (seeds above): the human
# plays 0,1,0,1,... so the tester locks on via the periodicity detector
ALT_SCORE = 46
ALT_EXPLOIT_ROUND = 16
ALT_TRIGGER = ("per", "6")


def alternating(rounds):
    return [(t - 1) % 2 for t in range(1, rounds + 1)]


def make_service(tmp_path, name="state", seed=SERVICE_SEED):
    return PenniesService(str(tmp_path / name), seed=seed)


def create(service, limit=64, **extra):
    fields = {"limit": str(limit), "seed": str(SESSION_SEED)}
    fields.update({k: str(v) for k, v in extra.items()})
    return decode_frame(service.create_session(fields))


def play(service, sid, moves, start=1):
    """Submit moves, verifying every reveal against the prior commitment."""
    commitment = decode_frame(service.snapshot(sid)).get("commitment")
    frames = []
    for offset, move in enumerate(moves):
        rnd = start + offset
        resp = decode_frame(
            service.submit_move(sid, {"round": str(rnd), "move": str(move)})
        )
        assert int(resp["round"]) == rnd
        nonce = bytes.fromhex(resp["nonce"])
        assert commitment_hash(int(resp["alice"]), nonce) == commitment
        commitment = resp.get("commitment")
        frames.append(resp)
    return frames


class TestCodec:
    def test_frame_round_trip_preserves_order(self):
        fields = {"zeta": "1", "alpha": "two", "mid": "0"}
        text = encode_frame(fields)
        assert text == "zeta:1\nalpha:two\nmid:0\n"
        assert decode_frame(text) == fields

    def test_record_is_one_line(self):
        text = encode_record({"type": "move", "round": 3, "move": 1})
        assert text == "type:move round:3 move:1\n"
        assert decode_frame(text) == {"type": "move", "round": "3", "move": "1"}

    def test_decode_splits_on_first_colon_only(self):
        assert decode_frame("k:a:b\n") == {"k": "a:b"}
        # the encoder stays strict so frames never need escaping
        with pytest.raises(ValueError):
            encode_frame({"note": "a:b"})

    @pytest.mark.parametrize("bad", ["", "a b", "a:b\nc", "x\ty", "nl\n"])
    def test_unsafe_tokens_rejected(self, bad):
        with pytest.raises(ValueError):
            encode_frame({bad or "k": "v", "key": bad})

    def test_malformed_line_is_bad_request(self):
        with pytest.raises(BadRequest):
            decode_frame("justaword\n")


class TestCommitmentHash:
    def test_matches_reference_construction(self):
        nonce = bytes(range(16))
        expected = hashlib.sha256(
            b"1" + nonce.hex().encode("ascii")
        ).hexdigest()
        assert commitment_hash(1, nonce) == expected
        assert commitment_hash(0, nonce) != expected

    def test_validates_inputs(self):
        with pytest.raises(ValueError):
            commitment_hash(2, bytes(16))
        with pytest.raises(ValueError):
            commitment_hash(0, bytes(15))


class TestSessionConfig:
    def test_defaults(self):
        config = SessionConfig()
        assert config.threshold == 6
        assert config.limit == 256
        assert config.bank_names == ("per", "cnt", "lz78", "xoralt")

    def test_from_fields(self):
        config = SessionConfig.from_fields(
            {"threshold": "4", "limit": "32", "bank": "per,lz78", "seed": "9"}
        )
        assert (config.threshold, config.limit) == (4, 32)
        assert config.bank_names == ("per", "lz78")
        assert config.seed == 9

    @pytest.mark.parametrize(
        "fields",
        [
            {"threshold": "0"},
            {"limit": "0"},
            {"limit": str(MAX_ROUNDS + 1)},
            {"bank": "per,nope"},
            {"bank": ""},
        ],
    )
    def test_rejects_bad_config(self, fields):
        with pytest.raises(InvalidConfig):
            SessionConfig.from_fields(fields)

    @pytest.mark.parametrize("fields", [{"threshold": "-1"}, {"seed": "x"}])
    def test_rejects_non_naturals(self, fields):
        with pytest.raises(BadRequest):
            SessionConfig.from_fields(fields)


class TestScriptedSession:
    def test_create_frame_shape(self, tmp_path):
        service = make_service(tmp_path)
        frame = create(service)
        assert frame["id"] == FIRST_SID
        assert len(frame["id"]) == 32
        assert frame["round"] == "1"
        assert len(frame["commitment"]) == 64
        assert frame["threshold"] == "6"
        assert frame["limit"] == "64"
        assert frame["bank"] == "per,cnt,lz78,xoralt"

    def test_alternating_64_rounds(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        frames = play(service, sid, alternating(64))

        score = 0
        first_exploit = None
        for t, resp in enumerate(frames, start=1):
            assert resp["payoff"] in ("1", "-1")
            score += int(resp["payoff"])
            assert int(resp["score"]) == score
            if first_exploit is None and resp["mode"] == "exploiting":
                first_exploit = t
        assert score == ALT_SCORE
        assert first_exploit == ALT_EXPLOIT_ROUND

        trigger = frames[ALT_EXPLOIT_ROUND - 1]
        assert trigger["triggered_detector"] == ALT_TRIGGER[0]
        assert trigger["sigma"] == ALT_TRIGGER[1]
        # one transition only, and every exploiting round wins
        for resp in frames[ALT_EXPLOIT_ROUND:]:
            assert resp["mode"] == "exploiting"
            assert resp["payoff"] == "1"

        final = frames[-1]
        assert final["complete"] == "1"
        assert "commitment" not in final
        assert service.is_complete(sid)

    def test_twin_services_agree_byte_for_byte(self, tmp_path):
        first = make_service(tmp_path, "a")
        second = make_service(tmp_path, "b")
        sid = create(first)["id"]
        assert create(second)["id"] == sid
        moves = alternating(64)
        for t, move in enumerate(moves, start=1):
            payload = {"round": str(t), "move": str(move)}
            assert first.submit_move(sid, payload) == second.submit_move(
                sid, payload
            )
        assert first.log_bytes(sid) == second.log_bytes(sid)

    def test_snapshot_tracks_progress(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(3))
        snap = decode_frame(service.snapshot(sid))
        assert snap["id"] == sid
        assert snap["round"] == "4"
        assert snap["mode"] == "testing"
        assert snap["complete"] == "0"
        assert len(snap["commitment"]) == 64

    def test_diagnostics_events_ramp(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(64))
        events = [decode_frame(f) for f in service.events_after(sid, 0)]
        # round events reuse the move-response frame; only diagnostics
        # frames carry an explicit type marker
        rounds = [int(e["round"]) for e in events if "payoff" in e]
        assert rounds == list(range(1, 65))
        diag = [e for e in events if e.get("type") == "diagnostics"]
        # the tester stops publishing sigmas once it locks on
        assert [int(d["round"]) for d in diag] == list(range(1, 17))
        assert set(diag[0]) == {
            "type", "round", "mode",
            "sigma_per", "sigma_cnt", "sigma_lz78", "sigma_xoralt",
        }
        assert diag[-1]["sigma_per"] == "6"
        assert diag[-1]["mode"] == "exploiting"
        partial = service.events_after(sid, 62)
        assert [decode_frame(f)["round"] for f in partial] == ["63", "64"]


class TestSubmitErrors:
    def test_unknown_session(self, tmp_path):
        service = make_service(tmp_path)
        with pytest.raises(UnknownSession):
            service.submit_move("f" * 32, {"round": "1", "move": "0"})
        with pytest.raises(UnknownSession):
            service.snapshot("f" * 32)

    def test_missing_fields(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        with pytest.raises(BadRequest):
            service.submit_move(sid, {"round": "1"})
        with pytest.raises(BadRequest):
            service.submit_move(sid, {"move": "0"})
        with pytest.raises(BadRequest):
            service.submit_move(sid, {"round": "1", "move": "2"})
        with pytest.raises(BadRequest):
            service.submit_move(sid, {"round": "-1", "move": "0"})

    def test_resubmission_is_idempotent(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        payload = {"round": "1", "move": "0"}
        before = service.log_bytes(sid)
        first = service.submit_move(sid, payload)
        logged = service.log_bytes(sid)
        assert service.submit_move(sid, payload) == first
        # replays do not append to the log
        assert service.log_bytes(sid) == logged
        assert logged != before

    def test_conflicting_replay_and_wrong_round(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        service.submit_move(sid, {"round": "1", "move": "0"})
        with pytest.raises(RoundMismatch):
            service.submit_move(sid, {"round": "1", "move": "1"})
        with pytest.raises(RoundMismatch):
            service.submit_move(sid, {"round": "5", "move": "0"})

    def test_completed_session_rejects_new_rounds(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service, limit=2)["id"]
        play(service, sid, [0, 1])
        with pytest.raises(SessionComplete):
            service.submit_move(sid, {"round": "3", "move": "0"})
        # but the final round still replays idempotently
        resp = decode_frame(
            service.submit_move(sid, {"round": "2", "move": "1"})
        )
        assert resp["complete"] == "1"

    def test_capacity_counts_active_sessions(self, tmp_path, monkeypatch):
        monkeypatch.setattr("pennies.service.MAX_SESSIONS", 2)
        service = make_service(tmp_path)
        first = decode_frame(service.create_session({"limit": "1"}))["id"]
        service.create_session({"limit": "1"})
        with pytest.raises(InvalidConfig):
            service.create_session({"limit": "1"})
        play(service, first, [0])
        service.create_session({"limit": "1"})


class TestRecovery:
    def test_restart_replays_to_identical_state(self, tmp_path):
        service = make_service(tmp_path, "a")
        twin = make_service(tmp_path, "b")
        sid = create(service)["id"]
        create(twin)
        moves = alternating(64)
        part_one = play(service, sid, moves[:20])
        snap = service.snapshot(sid)

        revived = PenniesService(str(tmp_path / "a"))
        assert revived.snapshot(sid) == snap
        # an idempotent replay of an already-played round survives restart
        replay = decode_frame(
            revived.submit_move(sid, {"round": "20", "move": str(moves[19])})
        )
        assert replay == part_one[19]

        part_two = play(revived, sid, moves[20:], start=21)
        straight = play(twin, sid, moves)
        assert part_one + part_two == straight
        assert revived.log_bytes(sid) == twin.log_bytes(sid)

    def test_recovery_detects_forged_commitment(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(4))
        path = tmp_path / "state" / (sid + ".log")
        lines = path.read_text().splitlines(keepends=True)
        forged = []
        for line in lines:
            if line.startswith("type:commit round:3 "):
                head, digest = line.rstrip("\n").rsplit(":", 1)
                flip = "0" if digest[0] != "0" else "f"
                line = head + ":" + flip + digest[1:] + "\n"
            forged.append(line)
        path.write_text("".join(forged))
        with pytest.raises(RuntimeError, match="corrupt"):
            PenniesService(str(tmp_path / "state"))

    def test_seed_stays_out_of_the_public_log(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(8))
        log = service.log_bytes(sid).decode()
        assert "seed" not in log
        private = (tmp_path / "state" / (sid + ".private")).read_text()
        assert "seed:%d" % SESSION_SEED in private


class TestAudit:
    def test_full_session_verifies(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(64))
        report = audit_records(service.log_bytes(sid).decode())
        assert report == {
            "reveals": 64,
            "verified": 64,
            "mismatches": [],
            "ok": True,
        }

    def test_flipped_reveal_is_caught(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(8))
        text = service.log_bytes(sid).decode()
        lines = text.splitlines(keepends=True)
        for i, line in enumerate(lines):
            if line.startswith("type:reveal round:5 "):
                lines[i] = (
                    line.replace("alice:0", "alice:1")
                    if "alice:0" in line
                    else line.replace("alice:1", "alice:0")
                )
        report = audit_records("".join(lines))
        assert report["ok"] is False
        assert report["mismatches"] == [5]
        assert report["verified"] == 7

    def test_reveal_without_commit_is_a_mismatch(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(4))
        lines = [
            line
            for line in service.log_bytes(sid).decode().splitlines(True)
            if not line.startswith("type:commit round:3 ")
        ]
        report = audit_records("".join(lines))
        assert report["mismatches"] == [3]

    def test_commit_after_move_is_a_mismatch(self, tmp_path):
        service = make_service(tmp_path)
        sid = create(service)["id"]
        play(service, sid, alternating(4))
        lines = service.log_bytes(sid).decode().splitlines(True)
        commit = next(
            i for i, l in enumerate(lines)
            if l.startswith("type:commit round:2 ")
        )
        move = next(
            i for i, l in enumerate(lines)
            if l.startswith("type:move round:2 ")
        )
        lines[commit], lines[move] = lines[move], lines[commit]
        report = audit_records("".join(lines))
        assert 2 in report["mismatches"]


class TestHttpSurface:
    @pytest.fixture
    def client(self, tmp_path):
        service = make_service(tmp_path)
        with TestClient(build_app(service)) as tc:
            tc.service = service
            yield tc

    def test_create_and_play_one_round(self, client):
        created = client.post(
            "/sessions", content="limit:8\nseed:%d\n" % SESSION_SEED
        )
        assert created.status_code == 200
        assert created.headers["content-type"].startswith("text/plain")
        frame = decode_frame(created.text)
        sid = frame["id"]
        moved = client.post(
            "/sessions/%s/moves" % sid, content="round:1\nmove:0\n"
        )
        assert moved.status_code == 200
        resp = decode_frame(moved.text)
        assert commitment_hash(
            int(resp["alice"]), bytes.fromhex(resp["nonce"])
        ) == frame["commitment"]

    def test_snapshot_and_log_endpoints(self, client):
        sid = decode_frame(client.post("/sessions", content="limit:4\n").text)[
            "id"
        ]
        client.post("/sessions/%s/moves" % sid, content="round:1\nmove:1\n")
        snap = client.get("/sessions/%s" % sid)
        assert snap.status_code == 200
        assert decode_frame(snap.text)["round"] == "2"
        log = client.get("/sessions/%s/log" % sid)
        assert log.status_code == 200
        assert log.content == client.service.log_bytes(sid)

    @pytest.mark.parametrize(
        "method,path,body,status,name",
        [
            ("post", "/sessions", "bank:bogus\n", 400, "InvalidConfig"),
            ("post", "/sessions", "limit\n", 400, "BadRequest"),
            ("get", "/sessions/%s" % ("e" * 32), "", 404, "UnknownSession"),
            ("get", "/sessions/%s/log" % ("e" * 32), "", 404, "UnknownSession"),
        ],
    )
    def test_error_statuses(self, client, method, path, body, status, name):
        if method == "post":
            resp = client.post(path, content=body)
        else:
            resp = client.get(path)
        assert resp.status_code == status
        assert resp.text == "error:%s\n" % name

    def test_round_conflict_and_completion_statuses(self, client):
        sid = decode_frame(client.post("/sessions", content="limit:1\n").text)[
            "id"
        ]
        stale = client.post(
            "/sessions/%s/moves" % sid, content="round:2\nmove:0\n"
        )
        assert stale.status_code == 409
        assert stale.text == "error:RoundMismatch\n"
        client.post("/sessions/%s/moves" % sid, content="round:1\nmove:0\n")
        done = client.post(
            "/sessions/%s/moves" % sid, content="round:2\nmove:0\n"
        )
        assert done.status_code == 410
        assert done.text == "error:SessionComplete\n"

    def test_websocket_streams_all_events(self, client):
        sid = decode_frame(
            client.post(
                "/sessions", content="limit:4\nseed:%d\n" % SESSION_SEED
            ).text
        )["id"]
        for t in range(1, 5):
            client.post(
                "/sessions/%s/moves" % sid,
                content="round:%d\nmove:%d\n" % (t, (t - 1) % 2),
            )
        frames = []
        with client.websocket_connect("/sessions/%s/stream" % sid) as ws:
            with pytest.raises(WebSocketDisconnect):
                while True:
                    frames.append(decode_frame(ws.receive_text()))
        reveals = [f for f in frames if "payoff" in f]
        assert [f["round"] for f in reveals] == ["1", "2", "3", "4"]
        # sigmas ride on the next round's commitment, so the final round
        # of a finished session publishes none
        assert sum(f.get("type") == "diagnostics" for f in frames) == 3

    def test_websocket_resumes_after_last(self, client):
        sid = decode_frame(
            client.post(
                "/sessions", content="limit:4\nseed:%d\n" % SESSION_SEED
            ).text
        )["id"]
        for t in range(1, 5):
            client.post(
                "/sessions/%s/moves" % sid,
                content="round:%d\nmove:%d\n" % (t, (t - 1) % 2),
            )
        frames = []
        with client.websocket_connect(
            "/sessions/%s/stream?last=2" % sid
        ) as ws:
            with pytest.raises(WebSocketDisconnect):
                while True:
                    frames.append(decode_frame(ws.receive_text()))
        assert {f["round"] for f in frames} == {"3", "4"}

    def test_websocket_unknown_session_closes_with_error(self, client):
        with client.websocket_connect(
            "/sessions/%s/stream" % ("e" * 32)
        ) as ws:
            assert ws.receive_text() == "error:UnknownSession\n"


def test_service_error_names_match_wire_names():
    for cls in (BadRequest, InvalidConfig, UnknownSession, RoundMismatch,
                SessionComplete):
        assert issubclass(cls, ServiceError)
        assert cls("x").name == cls.__name__
