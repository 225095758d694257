// Wire frames: one JSON object per newline-delimited frame, identical over
// TCP and WebSocket. This file mirrors the server schema field by field.

export const PROTOCOL_VERSION = 1;

export type ColorName =
  | "CYAN" | "GREEN" | "AMBER" | "RED" | "WHITE" | "MAGENTA" | "GREY";

export interface DisplayLine {
  ref: string;
  kind: "title" | "action" | "check" | "note" | "restriction" | "link" | "phase_title";
  text: string;
  color: ColorName;
  status: string | null;
  level2: string | null;
  level3: string | null;
  indent: number;
  current: boolean;
}

export interface PopupModel {
  proc: string;
  title: string;
  color: ColorName;
  ecam: boolean;
}

export interface ReminderEntry {
  proc: string;
  title: string;
}

export interface DisplayModel {
  tick: number;
  phase: string | null;
  view_phase: string;
  phase_menu: string[];
  lines: DisplayLine[];
  popup: PopupModel | null;
  reminder_bar: ReminderEntry[];
  active_procedure: string | null;
  page_cursor: number;
  perf_note: string | null;
}

export interface HelloFrame {
  kind: "hello";
  version: number;
  set_hash: string;
  role: string;
}

export interface CommandFrame {
  kind: "command";
  text: string;
}

export interface StateFrame {
  kind: "state";
  tick: number;
  assignments: Record<string, number | boolean | string>;
  phase: string | null;
}

export interface EventFrame {
  kind: "event";
  event: string;
  seq: number;
  tick: number;
  [field: string]: unknown;
}

export interface DisplayFrame {
  kind: "display";
  model: DisplayModel;
}

export interface SnapshotRequestFrame {
  kind: "snapshot_request";
}

export interface SnapshotReplyFrame {
  kind: "snapshot_reply";
  blob: string;
}

export interface ErrorFrame {
  kind: "error";
  code: string;
  message: string;
}

export type Frame =
  | HelloFrame | CommandFrame | StateFrame | EventFrame
  | DisplayFrame | SnapshotRequestFrame | SnapshotReplyFrame | ErrorFrame;

const KINDS = new Set([
  "hello", "command", "state", "event", "display",
  "snapshot_request", "snapshot_reply", "error",
]);

export function encodeFrame(frame: Frame): string {
  return JSON.stringify(frame);
}

export function decodeFrame(text: string): Frame {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new Error(`malformed frame: ${String(err)}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("malformed frame: not an object");
  }
  const kind = (doc as { kind?: unknown }).kind;
  if (typeof kind !== "string" || !KINDS.has(kind)) {
    throw new Error(`unknown frame kind ${JSON.stringify(kind)}`);
  }
  return doc as Frame;
}

export function helloFrame(role: string, setHash = ""): HelloFrame {
  return { kind: "hello", version: PROTOCOL_VERSION, set_hash: setHash, role };
}

export function commandFrame(text: string): CommandFrame {
  return { kind: "command", text };
}
