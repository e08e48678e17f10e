/**
 * DOM rendering for the session store.  One render pass per store
 * emission; the store owns all state and this module only draws it.
 */

import { sigmaCeiling, sparklinePath } from "./sparkline.js";
import { type RoundEntry, type SessionStore } from "./store.js";

const SPARK_WIDTH = 220;
const SPARK_HEIGHT = 48;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function shortHash(hash: string): string {
  return hash.slice(0, 12) + "…";
}

function verificationGlyph(entry: RoundEntry): string {
  if (entry.verification === "verified") return "✓";
  if (entry.verification === "mismatch") return "✗";
  return "⋯";
}

export class SessionViewRenderer {
  private store: SessionStore;
  private root: HTMLElement;

  constructor(store: SessionStore, root: HTMLElement) {
    this.store = store;
    this.root = root;
    store.subscribe(() => this.render());
  }

  render(): void {
    const view = this.store.view;
    const badge = this.root.querySelector<HTMLElement>("#mode-badge");
    if (badge) {
      const exploiting = view.mode === "exploiting";
      const detector = view.triggeredDetector ? ` (${view.triggeredDetector})` : "";
      badge.textContent = exploiting ? `Exploiting${detector}` : "Testing";
      badge.classList.toggle("exploiting", exploiting);
    }

    this.setText("#session-id", view.sessionId ?? "none");
    this.setText("#round-counter", view.complete
      ? `complete after ${view.history.length} rounds`
      : view.sessionId
        ? `round ${view.round} of ${view.limit}`
        : "-");
    this.setText("#machine-score", String(view.score));
    this.setText("#your-score", String(-view.score));
    this.setText(
      "#pending-commitment",
      view.pendingCommitment ? shortHash(view.pendingCommitment) : "-",
    );

    const alert = this.root.querySelector<HTMLElement>("#alert");
    if (alert) {
      const problems: string[] = [];
      if (view.mismatches.length > 0) {
        problems.push(`commitment mismatch in round(s) ${view.mismatches.join(", ")}`);
      }
      if (view.scoreDisagreements.length > 0) {
        problems.push(
          `server score disagreed in round(s) ${view.scoreDisagreements.join(", ")}`,
        );
      }
      if (view.error) problems.push(view.error);
      alert.textContent = problems.join(" — ");
      alert.classList.toggle("open", problems.length > 0);
    }

    const buttons = this.root.querySelectorAll<HTMLButtonElement>("button[data-move]");
    for (const button of buttons) {
      button.disabled =
        view.sessionId === null || view.complete || view.pendingCommitment === null;
    }

    this.renderHistory();
    this.renderSparklines();
  }

  private setText(selector: string, text: string): void {
    const node = this.root.querySelector<HTMLElement>(selector);
    if (node) node.textContent = text;
  }

  private renderHistory(): void {
    const body = this.root.querySelector<HTMLElement>("#history-body");
    if (!body) return;
    body.innerHTML = "";
    const entries = this.store.view.history;
    for (let i = entries.length - 1; i >= 0; i--) {
      const entry = entries[i];
      const row = el("tr", entry.verification === "mismatch" ? "mismatch-row" : "");
      row.appendChild(el("td", "", String(entry.round)));
      row.appendChild(el("td", "", entry.human ? "tails" : "heads"));
      row.appendChild(el("td", "", entry.alice ? "tails" : "heads"));
      row.appendChild(el("td", "", entry.alice === entry.human ? "machine" : "you"));
      row.appendChild(el("td", "", String(entry.clientScore)));
      const verify = el("td", "verify-" + entry.verification, verificationGlyph(entry));
      verify.title = `committed ${shortHash(entry.commitment)} nonce ${entry.nonce}`;
      row.appendChild(verify);
      body.appendChild(row);
    }
  }

  private renderSparklines(): void {
    const host = this.root.querySelector<HTMLElement>("#sparklines");
    if (!host) return;
    host.innerHTML = "";
    const view = this.store.view;
    const names = view.bank.length > 0 ? view.bank : Object.keys(view.sparklines);
    const ceiling = sigmaCeiling(
      names.map((name) => view.sparklines[name] ?? []),
      view.threshold,
    );
    for (const name of names) {
      const points = view.sparklines[name] ?? [];
      const wrap = el("div", "spark");
      const label = el("div", "spark-label");
      label.textContent = name;
      const last = points.length > 0 ? points[points.length - 1].sigma : null;
      label.appendChild(el("span", "spark-value", last === null ? "" : ` σ=${last}`));
      wrap.appendChild(label);

      const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
      svg.setAttribute("width", String(SPARK_WIDTH));
      svg.setAttribute("height", String(SPARK_HEIGHT));
      svg.setAttribute("class", "spark-canvas");

      const thresholdY =
        SPARK_HEIGHT - (view.threshold / Math.max(ceiling, 1)) * SPARK_HEIGHT;
      const bar = document.createElementNS("http://www.w3.org/2000/svg", "line");
      bar.setAttribute("x1", "0");
      bar.setAttribute("x2", String(SPARK_WIDTH));
      bar.setAttribute("y1", thresholdY.toFixed(1));
      bar.setAttribute("y2", thresholdY.toFixed(1));
      bar.setAttribute("class", "spark-threshold");
      svg.appendChild(bar);

      const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
      path.setAttribute(
        "d",
        sparklinePath(points, {
          width: SPARK_WIDTH,
          height: SPARK_HEIGHT,
          maxRound: Math.max(view.round, 1),
          maxSigma: ceiling,
        }),
      );
      path.setAttribute("class", "spark-line");
      svg.appendChild(path);
      wrap.appendChild(svg);
      host.appendChild(wrap);
    }
  }
}
