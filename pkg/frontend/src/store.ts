/**
 * Single client-side store for one live session.
 *
 * All state transitions go through this object: round play, stream
 * ingestion, resume-from-log, verification results.  Two rules are
 * enforced structurally and never relaxed:
 *
 *   - a move is only transmitted when the round's commitment hash has
 *     already been stored (and therefore shown to the user);
 *   - the displayed score is recomputed from the move pairs; the
 *     server's score field is only cross-checked, never adopted.
 */

import { type ServiceClient, type SessionConfigFields } from "./api.js";
import { decodeFrame, type Frame } from "./codec.js";
import { verifyReveal } from "./commitment.js";

export type Mode = "testing" | "exploiting";
export type Verification = "pending" | "verified" | "mismatch";

export interface RoundEntry {
  round: number;
  /** Hash the server committed to before our move was sent. */
  commitment: string;
  human: 0 | 1;
  alice: 0 | 1;
  nonce: string;
  /** Cumulative machine score recomputed client-side from the moves. */
  clientScore: number;
  serverScore: number;
  scoreAgrees: boolean;
  verification: Verification;
}

export interface SigmaPoint {
  round: number;
  sigma: number;
}

export interface SessionView {
  sessionId: string | null;
  threshold: number;
  limit: number;
  bank: string[];
  /** Next round to play (limit + 1 once complete). */
  round: number;
  complete: boolean;
  mode: Mode;
  triggeredDetector: string | null;
  triggeredSigma: number | null;
  /** Machine's cumulative score, client-side; the human's is its negation. */
  score: number;
  pendingCommitment: string | null;
  history: RoundEntry[];
  /** Per-detector sigma samples at the service's diagnostic cadence. */
  sparklines: Record<string, SigmaPoint[]>;
  /** Rounds whose reveal failed hash verification; never cleared. */
  mismatches: number[];
  /** Rounds where the server's score field disagreed with ours. */
  scoreDisagreements: number[];
  error: string | null;
  streamOpen: boolean;
}

/** The subset of the WebSocket API the store drives. */
export interface SocketLike {
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

function emptyView(): SessionView {
  return {
    sessionId: null,
    threshold: 0,
    limit: 0,
    bank: [],
    round: 0,
    complete: false,
    mode: "testing",
    triggeredDetector: null,
    triggeredSigma: null,
    score: 0,
    pendingCommitment: null,
    history: [],
    sparklines: {},
    mismatches: [],
    scoreDisagreements: [],
    error: null,
    streamOpen: false,
  };
}

function parseIntField(frame: Frame, key: string): number {
  const raw = frame[key];
  if (raw === undefined || !/^-?\d+$/.test(raw)) {
    throw new Error(`frame field ${key} is not an integer: ${JSON.stringify(raw)}`);
  }
  return Number(raw);
}

function parseBitField(frame: Frame, key: string): 0 | 1 {
  const raw = frame[key];
  if (raw !== "0" && raw !== "1") {
    throw new Error(`frame field ${key} is not a bit: ${JSON.stringify(raw)}`);
  }
  return raw === "1" ? 1 : 0;
}

export class SessionStore {
  readonly client: ServiceClient;
  view: SessionView;
  /** Exact text of the last exported log, for byte-equality checks. */
  lastExport: string | null = null;

  private listeners: Array<() => void> = [];
  private socket: SocketLike | null = null;
  private pendingChecks: Array<Promise<void>> = [];

  constructor(client: ServiceClient) {
    this.client = client;
    this.view = emptyView();
  }

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((fn) => fn !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  /** Wait for all in-flight commitment verifications to land. */
  async settle(): Promise<void> {
    while (this.pendingChecks.length > 0) {
      const batch = this.pendingChecks;
      this.pendingChecks = [];
      await Promise.all(batch);
    }
  }

  // ---------------------------------------------------------- lifecycle

  async newSession(config: SessionConfigFields): Promise<void> {
    const frame = await this.client.createSession(config);
    this.closeStream();
    this.view = emptyView();
    this.view.sessionId = frame["id"];
    this.view.threshold = parseIntField(frame, "threshold");
    this.view.limit = parseIntField(frame, "limit");
    this.view.bank = (frame["bank"] ?? "").split(",").filter(Boolean);
    this.view.round = parseIntField(frame, "round");
    this.adoptCommitment(frame["commitment"] ?? null);
    this.emit();
  }

  /** Rebuild the full view for an existing session from its public log. */
  async resume(sid: string): Promise<void> {
    const snapshot = await this.client.snapshot(sid);
    const logText = await this.client.logText(sid);
    this.closeStream();
    this.view = emptyView();
    this.view.sessionId = sid;
    this.view.threshold = parseIntField(snapshot, "threshold");
    this.view.limit = parseIntField(snapshot, "limit");
    this.view.bank = (snapshot["bank"] ?? "").split(",").filter(Boolean);
    this.view.complete = snapshot["complete"] === "1";
    this.view.mode = snapshot["mode"] === "exploiting" ? "exploiting" : "testing";

    const commitments = new Map<number, string>();
    const humanMoves = new Map<number, 0 | 1>();
    for (const line of logText.split("\n")) {
      if (!line.trim()) continue;
      const record = decodeFrame(line);
      const kind = record["type"];
      if (kind === "commit") {
        commitments.set(parseIntField(record, "round"), record["hash"]);
      } else if (kind === "move") {
        humanMoves.set(parseIntField(record, "round"), parseBitField(record, "move"));
      } else if (kind === "reveal") {
        const round = parseIntField(record, "round");
        const committed = commitments.get(round);
        const human = humanMoves.get(round);
        if (committed === undefined || human === undefined) {
          this.view.error = `log is missing the commit or move for round ${round}`;
          continue;
        }
        this.recordReveal(round, human, committed, record);
      }
    }
    this.view.round = parseIntField(snapshot, "round");
    this.adoptCommitment(snapshot["commitment"] ?? null);
    this.emit();
  }

  // ---------------------------------------------------------- round play

  /**
   * Send the human's move for the current round.  Refuses outright when
   * no commitment hash is stored: the move must never travel first.
   */
  async playRound(move: 0 | 1): Promise<RoundEntry> {
    const sid = this.view.sessionId;
    if (sid === null) throw new Error("no open session");
    if (this.view.complete) throw new Error("session is complete");
    const committed = this.view.pendingCommitment;
    if (committed === null) {
      throw new Error("no commitment stored for this round; refusing to send the move");
    }
    const round = this.view.round;
    const frame = await this.client.submitMove(sid, round, move);
    const entry = this.recordReveal(round, move, committed, frame);
    this.view.round = round + 1;
    this.view.complete = frame["complete"] === "1";
    this.adoptCommitment(frame["commitment"] ?? null);
    this.emit();
    return entry;
  }

  private adoptCommitment(hash: string | null): void {
    this.view.pendingCommitment = hash;
  }

  private recordReveal(
    round: number,
    human: 0 | 1,
    committed: string,
    frame: Frame,
  ): RoundEntry {
    const alice = parseBitField(frame, "alice");
    const nonce = frame["nonce"] ?? "";
    const serverScore = parseIntField(frame, "score");
    const previous =
      this.view.history.length > 0
        ? this.view.history[this.view.history.length - 1].clientScore
        : 0;
    const clientScore = previous + (alice === human ? 1 : -1);
    const entry: RoundEntry = {
      round,
      commitment: committed,
      human,
      alice,
      nonce,
      clientScore,
      serverScore,
      scoreAgrees: clientScore === serverScore,
      verification: "pending",
    };
    this.view.history.push(entry);
    this.view.score = clientScore;
    if (!entry.scoreAgrees) this.view.scoreDisagreements.push(round);
    if (frame["mode"] === "exploiting") this.view.mode = "exploiting";
    else if (frame["mode"] === "testing" && this.view.mode !== "exploiting") {
      this.view.mode = "testing";
    }
    if (frame["triggered_detector"] !== undefined) {
      this.view.triggeredDetector = frame["triggered_detector"];
      this.view.triggeredSigma = parseIntField(frame, "sigma");
    }
    const check = verifyReveal(committed, alice, nonce).then((ok) => {
      entry.verification = ok ? "verified" : "mismatch";
      if (!ok) this.view.mismatches.push(round);
      this.emit();
    });
    this.pendingChecks.push(check);
    return entry;
  }

  // ---------------------------------------------------------- streaming

  /** One stream per open session; reconnecting replaces the socket. */
  connectStream(factory: SocketFactory, lastSeenRound = 0): void {
    const sid = this.view.sessionId;
    if (sid === null) throw new Error("no open session");
    this.closeStream();
    const socket = factory(this.client.streamUrl(sid, lastSeenRound));
    this.socket = socket;
    this.view.streamOpen = true;
    socket.onmessage = (event) => {
      this.ingestStreamFrame(decodeFrame(String(event.data)));
    };
    socket.onclose = () => {
      if (this.socket === socket) {
        this.socket = null;
        this.view.streamOpen = false;
        this.emit();
      }
    };
    socket.onerror = () => {
      this.view.error = "stream error";
      this.emit();
    };
    this.emit();
  }

  closeStream(): void {
    if (this.socket !== null) {
      const socket = this.socket;
      this.socket = null;
      socket.onclose = null;
      socket.close();
      this.view.streamOpen = false;
    }
  }

  /**
   * Fold one stream frame into the view.  Diagnostics frames feed the
   * sigma sparklines (one sample per tested round, matching the server's
   * testing cadence); round frames only cross-check what direct
   * responses already recorded.
   */
  ingestStreamFrame(frame: Frame): void {
    if (frame["error"] !== undefined) {
      this.view.error = frame["error"];
      this.emit();
      return;
    }
    if (frame["type"] === "diagnostics") {
      const round = parseIntField(frame, "round");
      for (const [key, value] of Object.entries(frame)) {
        if (!key.startsWith("sigma_")) continue;
        const name = key.slice("sigma_".length);
        const series = (this.view.sparklines[name] ??= []);
        if (!series.some((point) => point.round === round)) {
          series.push({ round, sigma: Number(value) });
          series.sort((a, b) => a.round - b.round);
        }
      }
      this.emit();
      return;
    }
    if (frame["round"] !== undefined) {
      if (frame["mode"] === "exploiting") this.view.mode = "exploiting";
      if (frame["triggered_detector"] !== undefined) {
        this.view.triggeredDetector = frame["triggered_detector"];
        this.view.triggeredSigma = parseIntField(frame, "sigma");
      }
      if (frame["complete"] === "1") this.view.complete = true;
      this.emit();
    }
  }

  // ---------------------------------------------------------- export

  /** Fetch the exact server log text (ASCII: string equals bytes). */
  async exportLog(): Promise<string> {
    const sid = this.view.sessionId;
    if (sid === null) throw new Error("no open session");
    const text = await this.client.logText(sid);
    this.lastExport = text;
    this.emit();
    return text;
  }
}
