import { describe, expect, it } from "vitest";

import { type ServiceClient } from "../src/api.js";
import { encodeFrame, encodeRecord, type Frame } from "../src/codec.js";
import { commitmentHash } from "../src/commitment.js";
import { SessionStore } from "../src/store.js";

/**
 * In-memory stand-in for the service speaking the same frames, with
 * optional tampering knobs.  Commitments are real SHA-256 hashes so the
 * store's verification path runs for real.
 */
class FakeService {
  readonly id = "fake0000fake0000";
  readonly script: Array<0 | 1>;
  readonly limit: number;
  readonly threshold = 6;
  readonly triggerRound: number;
  tamperNonceRound: number | null = null;
  tamperScoreRound: number | null = null;
  omitCommitment = false;
  submitCalls = 0;

  private round = 1;
  private score = 0;
  private records: string[] = [];
  private pendingHash: string | null = null;

  constructor(script: Array<0 | 1>, triggerRound = Number.POSITIVE_INFINITY) {
    this.script = script;
    this.limit = script.length;
    this.triggerRound = triggerRound;
  }

  private nonceFor(round: number): string {
    return round.toString(16).padStart(4, "0").repeat(8);
  }

  private modeFor(round: number): string {
    return round >= this.triggerRound ? "exploiting" : "testing";
  }

  private async commitNext(): Promise<void> {
    if (this.round > this.limit) {
      this.pendingHash = null;
      return;
    }
    const move = this.script[this.round - 1];
    this.pendingHash = await commitmentHash(move, this.nonceFor(this.round));
    this.records.push(
      encodeRecord({
        type: "commit",
        round: String(this.round),
        hash: this.pendingHash,
      }),
    );
  }

  async createSession(): Promise<Frame> {
    this.records.push(
      encodeRecord({
        type: "created",
        id: this.id,
        threshold: String(this.threshold),
        limit: String(this.limit),
        bank: "per,cnt,lz78,xoralt",
      }),
    );
    await this.commitNext();
    const frame: Frame = {
      id: this.id,
      round: "1",
      threshold: String(this.threshold),
      limit: String(this.limit),
      bank: "per,cnt,lz78,xoralt",
    };
    if (!this.omitCommitment && this.pendingHash !== null) {
      frame["commitment"] = this.pendingHash;
    }
    return frame;
  }

  async submitMove(_sid: string, round: number, move: 0 | 1): Promise<Frame> {
    this.submitCalls += 1;
    expect(round).toBe(this.round);
    const alice = this.script[round - 1];
    const gain = alice === move ? 1 : -1;
    this.score += gain;
    let nonce = this.nonceFor(round);
    if (this.tamperNonceRound === round) {
      nonce = nonce.replace(/^./, nonce[0] === "0" ? "1" : "0");
    }
    let reportedScore = this.score;
    if (this.tamperScoreRound === round) reportedScore += 100;

    this.records.push(
      encodeRecord({ type: "move", round: String(round), move: String(move) }),
    );
    const reveal: Frame = {
      type: "reveal",
      round: String(round),
      alice: String(alice),
      nonce,
      payoff: String(gain),
      score: String(reportedScore),
      mode: this.modeFor(round),
    };
    if (round === this.triggerRound) {
      reveal["triggered_detector"] = "per";
      reveal["sigma"] = "6";
    }
    this.records.push(encodeRecord(reveal));

    this.round += 1;
    await this.commitNext();

    const response: Frame = { ...reveal };
    delete response["type"];
    if (this.round > this.limit) {
      response["complete"] = "1";
      this.records.push(
        encodeRecord({
          type: "complete",
          rounds: String(round),
          score: String(this.score),
        }),
      );
    } else {
      response["commitment"] = this.pendingHash as string;
    }
    return response;
  }

  async snapshot(): Promise<Frame> {
    const frame: Frame = {
      id: this.id,
      round: String(this.round),
      score: String(this.score),
      mode: this.modeFor(Math.min(this.round, this.limit)),
      complete: this.round > this.limit ? "1" : "0",
      threshold: String(this.threshold),
      limit: String(this.limit),
      bank: "per,cnt,lz78,xoralt",
    };
    if (this.pendingHash !== null) frame["commitment"] = this.pendingHash;
    return frame;
  }

  async logText(): Promise<string> {
    return this.records.join("");
  }

  streamUrl(sid: string, last: number): string {
    return `ws://fake/sessions/${sid}/stream?last=${last}`;
  }

  asClient(): ServiceClient {
    return this as unknown as ServiceClient;
  }
}

async function playAll(store: SessionStore, moves: Array<0 | 1>): Promise<void> {
  for (const move of moves) {
    await store.playRound(move);
  }
  await store.settle();
}

describe("round play", () => {
  it("recomputes the score from move pairs and verifies every reveal", async () => {
    const fake = new FakeService([1, 1, 0, 1]);
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    expect(store.view.pendingCommitment).not.toBeNull();

    await playAll(store, [1, 0, 0, 0]);
    // matches on rounds 1 and 3, misses on 2 and 4
    expect(store.view.history.map((e) => e.clientScore)).toEqual([1, 0, 1, 0]);
    expect(store.view.score).toBe(0);
    expect(store.view.history.every((e) => e.scoreAgrees)).toBe(true);
    expect(store.view.history.every((e) => e.verification === "verified")).toBe(true);
    expect(store.view.mismatches).toEqual([]);
    expect(store.view.complete).toBe(true);
    expect(store.view.pendingCommitment).toBeNull();
    expect(store.view.round).toBe(5);
  });

  it("latches the exploiting badge and the triggering detector", async () => {
    const fake = new FakeService([0, 0, 0, 0], 3);
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    await playAll(store, [0, 0, 0, 0]);
    expect(store.view.mode).toBe("exploiting");
    expect(store.view.triggeredDetector).toBe("per");
    expect(store.view.triggeredSigma).toBe(6);
  });

  it("refuses to transmit a move without a stored commitment", async () => {
    const fake = new FakeService([1, 0]);
    fake.omitCommitment = true;
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    await expect(store.playRound(1)).rejects.toThrow(/refusing to send/);
    expect(fake.submitCalls).toBe(0);
  });

  it("refuses to play with no session open", async () => {
    const store = new SessionStore(new FakeService([1]).asClient());
    await expect(store.playRound(0)).rejects.toThrow(/no open session/);
  });
});

describe("tampering", () => {
  it("flags a reveal whose nonce does not re-hash to the commitment", async () => {
    const fake = new FakeService([1, 0, 1]);
    fake.tamperNonceRound = 2;
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    await playAll(store, [1, 1, 1]);
    const verdicts = store.view.history.map((e) => e.verification);
    expect(verdicts).toEqual(["verified", "mismatch", "verified"]);
    expect(store.view.mismatches).toEqual([2]);
  });

  it("keeps the client score when the server misreports its own", async () => {
    const fake = new FakeService([1, 1]);
    fake.tamperScoreRound = 2;
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    await playAll(store, [1, 1]);
    expect(store.view.score).toBe(2);
    expect(store.view.scoreDisagreements).toEqual([2]);
    expect(store.view.history[1].serverScore).toBe(102);
    expect(store.view.history[1].clientScore).toBe(2);
  });
});

describe("resume from the public log", () => {
  it("rebuilds history, verification, and the trigger latch", async () => {
    const fake = new FakeService([1, 0, 1, 0, 1], 4);
    const first = new SessionStore(fake.asClient());
    await first.newSession({});
    await playAll(first, [1, 1, 1, 0, 1]);

    const resumed = new SessionStore(fake.asClient());
    await resumed.resume(fake.id);
    await resumed.settle();

    expect(resumed.view.history.map((e) => e.clientScore)).toEqual(
      first.view.history.map((e) => e.clientScore),
    );
    expect(resumed.view.score).toBe(first.view.score);
    expect(resumed.view.history.every((e) => e.verification === "verified")).toBe(true);
    expect(resumed.view.mode).toBe("exploiting");
    expect(resumed.view.triggeredDetector).toBe("per");
    expect(resumed.view.complete).toBe(true);
    expect(resumed.view.round).toBe(6);
  });

  it("continues an interrupted session from where the log ends", async () => {
    const fake = new FakeService([1, 0, 1, 0]);
    const first = new SessionStore(fake.asClient());
    await first.newSession({});
    await first.playRound(1);
    await first.playRound(1);

    const resumed = new SessionStore(fake.asClient());
    await resumed.resume(fake.id);
    expect(resumed.view.round).toBe(3);
    expect(resumed.view.pendingCommitment).not.toBeNull();
    await resumed.playRound(0);
    await resumed.playRound(0);
    await resumed.settle();
    expect(resumed.view.complete).toBe(true);
    // rounds: match, miss, miss, match -> cumulative 1, 0, -1, 0
    expect(resumed.view.history.map((e) => e.clientScore)).toEqual([1, 0, -1, 0]);
    expect(resumed.view.mismatches).toEqual([]);
  });
});

describe("stream ingestion", () => {
  it("collects sigma sparkline points at the diagnostic cadence", async () => {
    const fake = new FakeService([1, 1]);
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    store.ingestStreamFrame({
      type: "diagnostics",
      round: "1",
      mode: "testing",
      sigma_per: "0",
      sigma_cnt: "0",
    });
    store.ingestStreamFrame({
      type: "diagnostics",
      round: "2",
      mode: "testing",
      sigma_per: "5",
      sigma_cnt: "1",
    });
    // replayed duplicate is ignored
    store.ingestStreamFrame({
      type: "diagnostics",
      round: "2",
      mode: "testing",
      sigma_per: "9",
      sigma_cnt: "9",
    });
    expect(store.view.sparklines["per"]).toEqual([
      { round: 1, sigma: 0 },
      { round: 2, sigma: 5 },
    ]);
    expect(store.view.sparklines["cnt"]).toEqual([
      { round: 1, sigma: 0 },
      { round: 2, sigma: 1 },
    ]);
  });

  it("latches mode and completion from replayed round frames", async () => {
    const fake = new FakeService([1]);
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    store.ingestStreamFrame({
      round: "1",
      alice: "1",
      nonce: "00".repeat(16),
      payoff: "1",
      score: "1",
      mode: "exploiting",
      triggered_detector: "cnt",
      sigma: "7",
      complete: "1",
    });
    expect(store.view.mode).toBe("exploiting");
    expect(store.view.triggeredDetector).toBe("cnt");
    expect(store.view.complete).toBe(true);
  });

  it("surfaces error frames without touching history", async () => {
    const fake = new FakeService([1]);
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    store.ingestStreamFrame({ error: "UnknownSession" });
    expect(store.view.error).toBe("UnknownSession");
    expect(store.view.history).toEqual([]);
  });
});

describe("log export", () => {
  it("stores the exact text the service returned", async () => {
    const fake = new FakeService([1, 0]);
    const store = new SessionStore(fake.asClient());
    await store.newSession({});
    await playAll(store, [1, 0]);
    const text = await store.exportLog();
    expect(text).toBe(await fake.logText());
    expect(store.lastExport).toBe(text);
    expect(text).toMatch(/^type:created /);
    expect(text.endsWith("\n")).toBe(true);
  });
});
