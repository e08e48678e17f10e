/**
 * Browser entry point: wires the controls to the store and starts the
 * renderer.  The service address defaults to the page origin so the
 * static files can be served next to the API in development.
 */

import { ServiceClient, ServiceWireError } from "./api.js";
import { SessionStore, type SocketLike } from "./store.js";
import { SessionViewRenderer } from "./view.js";

function serviceBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("service") ?? window.location.origin;
}

function numberInput(id: string): number | undefined {
  const node = document.getElementById(id) as HTMLInputElement | null;
  if (!node || node.value.trim() === "") return undefined;
  const value = Number(node.value);
  return Number.isFinite(value) ? value : undefined;
}

function chosenBank(): string[] | undefined {
  const boxes = document.querySelectorAll<HTMLInputElement>("input[data-bank]");
  const names: string[] = [];
  for (const box of boxes) {
    if (box.checked) names.push(box.dataset["bank"] ?? "");
  }
  if (names.length === 0 || names.length === boxes.length) return undefined;
  return names;
}

function describeError(error: unknown): string {
  if (error instanceof ServiceWireError) return error.errorName;
  return error instanceof Error ? error.message : String(error);
}

function main(): void {
  const root = document.body;
  const store = new SessionStore(new ServiceClient(serviceBase()));
  new SessionViewRenderer(store, root);

  const surface = (work: Promise<unknown>) => {
    work.catch((error) => {
      store.view.error = describeError(error);
      store.view.streamOpen = false;
    });
  };

  const openStream = (last: number) => {
    store.connectStream((url) => new WebSocket(url) as unknown as SocketLike, last);
  };

  document.getElementById("new-session")?.addEventListener("click", () => {
    surface(
      store
        .newSession({
          threshold: numberInput("threshold"),
          limit: numberInput("limit"),
          seed: numberInput("seed"),
          bank: chosenBank(),
        })
        .then(() => openStream(0)),
    );
  });

  document.getElementById("resume-session")?.addEventListener("click", () => {
    const box = document.getElementById("resume-id") as HTMLInputElement | null;
    const sid = box?.value.trim();
    if (!sid) return;
    surface(store.resume(sid).then(() => openStream(0)));
  });

  for (const button of document.querySelectorAll<HTMLButtonElement>("button[data-move]")) {
    button.addEventListener("click", () => {
      const move = button.dataset["move"] === "1" ? 1 : 0;
      surface(store.playRound(move));
    });
  }

  document.getElementById("export-log")?.addEventListener("click", () => {
    surface(
      store.exportLog().then((text) => {
        const blob = new Blob([text], { type: "text/plain" });
        const link = document.createElement("a");
        link.href = URL.createObjectURL(blob);
        link.download = `${store.view.sessionId ?? "session"}.log`;
        link.click();
        URL.revokeObjectURL(link.href);
      }),
    );
  });
}

main();
