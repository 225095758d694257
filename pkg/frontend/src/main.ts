// Browser entry: WebSocket transport, render-on-Display, gesture wiring.
// The page is stateless beyond the latest Display, the expansion set, and
// the socket: reloading reproduces the identical default view.

import { SessionClient } from "./client.js";
import { renderHtml } from "./render.js";

function serverUrl(): string {
  const params = new URLSearchParams(location.search);
  const explicit = params.get("ws");
  if (explicit) return explicit;
  const host = location.hostname || "127.0.0.1";
  return `ws://${host}:${params.get("port") ?? "8751"}`;
}

const root = document.getElementById("app")!;
const expanded = new Set<string>();

function paint(): void {
  root.innerHTML = renderHtml({
    display: client.display,
    banner: client.banner,
    expanded,
  });
}

const client = new SessionClient({ onChange: paint });

function boot(): void {
  const ws = new WebSocket(serverUrl());
  ws.onopen = () => {
    client.attach({ send: (line) => ws.send(line), close: () => ws.close() });
  };
  ws.onmessage = (event) => {
    if (typeof event.data === "string") client.handleLine(event.data);
  };
  ws.onclose = () => {
    client.handleClose();
    setTimeout(boot, 1500); // reconnect re-syncs from the next Display
  };
  ws.onerror = () => ws.close();
}

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>(
    "[data-cmd], [data-expand], [data-swipe]");
  if (!target) return;
  const cmd = target.dataset["cmd"];
  if (cmd) {
    client.issue(cmd);
    return;
  }
  const expandRef = target.dataset["expand"];
  if (expandRef) {
    // Expansion is purely local: no round trip, collapsed again on reload.
    if (expanded.has(expandRef)) expanded.delete(expandRef);
    else expanded.add(expandRef);
    paint();
    return;
  }
  const swipe = target.dataset["swipe"];
  if (swipe) client.swipe(Number(swipe) as -1 | 1);
});

paint();
boot();
