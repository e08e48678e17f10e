/**
 * HTTP client for the session service.  Every request and response body
 * is a field:value frame; errors come back as "error:<Name>" frames with
 * a non-2xx status and surface here as ServiceWireError.
 */

import { decodeFrame, encodeFrame, type Frame } from "./codec.js";

export class ServiceWireError extends Error {
  readonly errorName: string;
  readonly status: number;

  constructor(errorName: string, status: number) {
    super(`${errorName} (http ${status})`);
    this.errorName = errorName;
    this.status = status;
  }
}

export interface SessionConfigFields {
  threshold?: number;
  limit?: number;
  bank?: string[];
  seed?: number;
}

export class ServiceClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request(path: string, body?: string): Promise<Frame> {
    const response = await fetch(this.baseUrl + path, {
      method: body === undefined ? "GET" : "POST",
      body,
      headers: { "content-type": "text/plain" },
    });
    const text = await response.text();
    if (!response.ok) {
      let name = "ServiceError";
      try {
        name = decodeFrame(text)["error"] ?? name;
      } catch {
        // non-frame body; keep the generic name
      }
      throw new ServiceWireError(name, response.status);
    }
    return decodeFrame(text);
  }

  async createSession(config: SessionConfigFields): Promise<Frame> {
    const fields: Frame = {};
    if (config.threshold !== undefined) fields["threshold"] = String(config.threshold);
    if (config.limit !== undefined) fields["limit"] = String(config.limit);
    if (config.bank !== undefined) fields["bank"] = config.bank.join(",");
    if (config.seed !== undefined) fields["seed"] = String(config.seed);
    const body = Object.keys(fields).length > 0 ? encodeFrame(fields) : "\n";
    return this.request("/sessions", body);
  }

  async submitMove(sid: string, round: number, move: 0 | 1): Promise<Frame> {
    const body = encodeFrame({ round: String(round), move: String(move) });
    return this.request(`/sessions/${sid}/moves`, body);
  }

  async snapshot(sid: string): Promise<Frame> {
    return this.request(`/sessions/${sid}`);
  }

  /** Raw session log text; ASCII, so string equality is byte equality. */
  async logText(sid: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/sessions/${sid}/log`);
    const text = await response.text();
    if (!response.ok) {
      let name = "ServiceError";
      try {
        name = decodeFrame(text)["error"] ?? name;
      } catch {
        // keep the generic name
      }
      throw new ServiceWireError(name, response.status);
    }
    return text;
  }

  /** ws:// URL for the event stream, resuming after a last-seen round. */
  streamUrl(sid: string, lastSeenRound = 0): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${sid}/stream?last=${lastSeenRound}`;
  }
}
