// Node-side test plumbing: a TCP transport speaking the same newline
// frames the browser gets over WebSocket, and a live server fixture that
// spawns the engine CLI.

import { spawn, ChildProcess } from "node:child_process";
import net from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { SessionClient } from "../src/client.js";
import { DisplayModel } from "../src/protocol.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
export const REPO = path.resolve(HERE, "..", "..");
export const CORPUS = path.join(REPO, "corpus");

export class TcpTransport {
  private buffer = "";

  constructor(
    readonly socket: net.Socket,
    private readonly client: SessionClient,
  ) {
    socket.setEncoding("utf-8");
    socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let index;
      while ((index = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, index);
        this.buffer = this.buffer.slice(index + 1);
        client.handleLine(line);
      }
    });
    socket.on("close", () => client.handleClose());
    socket.on("error", () => undefined);
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }

  close(): void {
    this.socket.destroy();
  }
}

export interface LiveServer {
  port: number;
  process: ChildProcess;
  stop(): Promise<void>;
}

export async function startServer(extra: string[] = []): Promise<LiveServer> {
  const proc = spawn(
    "python3",
    ["-m", "ocsis", "serve", "--procedures", CORPUS, "--port", "0",
     "--ws-port", "-1", ...extra],
    { cwd: REPO, stdio: ["ignore", "pipe", "ignore"] },
  );
  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 15000);
    let out = "";
    proc.stdout!.setEncoding("utf-8");
    proc.stdout!.on("data", (chunk: string) => {
      out += chunk;
      const match = out.match(/listening tcp=[^:]+:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    proc.on("exit", () => reject(new Error(`server exited: ${out}`)));
  });
  return {
    port,
    process: proc,
    stop: () =>
      new Promise((resolve) => {
        proc.on("exit", () => resolve());
        proc.kill("SIGTERM");
      }),
  };
}

export interface ConnectedClient {
  client: SessionClient;
  transport: TcpTransport;
  nextChange(predicate?: () => boolean, timeoutMs?: number): Promise<void>;
  close(): void;
}

export async function connectClient(port: number, role = "ui"): Promise<ConnectedClient> {
  const waiters: Array<{ predicate: () => boolean; resolve: () => void }> = [];
  const client = new SessionClient({
    onChange: () => {
      for (let i = waiters.length - 1; i >= 0; i--) {
        if (waiters[i]!.predicate()) {
          waiters[i]!.resolve();
          waiters.splice(i, 1);
        }
      }
    },
  });
  const socket = await new Promise<net.Socket>((resolve, reject) => {
    const s = net.createConnection({ host: "127.0.0.1", port }, () => resolve(s));
    s.on("error", reject);
  });
  const transport = new TcpTransport(socket, client);
  client.attach(transport);

  const nextChange = (predicate: () => boolean = () => true, timeoutMs = 10000) =>
    new Promise<void>((resolve, reject) => {
      if (predicate()) return resolve();
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for display change")), timeoutMs);
      waiters.push({
        predicate,
        resolve: () => {
          clearTimeout(timer);
          resolve();
        },
      });
    });

  return { client, transport, nextChange, close: () => transport.close() };
}

export function lineByRef(display: DisplayModel, ref: string) {
  const line = display.lines.find((l) => l.ref === ref);
  if (!line) throw new Error(`no line ${ref} in display`);
  return line;
}
