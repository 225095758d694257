// Session client: applies frames in arrival order, keeps only the latest
// Display. The server is authoritative; issuing a command never touches
// local state (the next Display frame is the ground truth).

import {
  DisplayModel,
  Frame,
  PROTOCOL_VERSION,
  commandFrame,
  decodeFrame,
  encodeFrame,
  helloFrame,
} from "./protocol.js";

export interface Transport {
  send(line: string): void;
  close(): void;
}

export interface ClientEvents {
  onChange?: () => void;
  onEvent?: (frame: Frame) => void;
}

export class SessionClient {
  display: DisplayModel | null = null;
  serverHash: string | null = null;
  banner: string | null = "connecting";
  closed = false;

  private transport: Transport | null = null;
  private readonly events: ClientEvents;

  constructor(events: ClientEvents = {}) {
    this.events = events;
  }

  attach(transport: Transport): void {
    // A reconnect re-syncs from the next Display; nothing is kept from the
    // old socket beyond the last rendered model.
    this.transport = transport;
    this.closed = false;
    this.banner = "connecting";
    transport.send(encodeFrame(helloFrame("ui")));
    this.changed();
  }

  handleLine(line: string): void {
    if (!line.trim()) return;
    let frame: Frame;
    try {
      frame = decodeFrame(line);
    } catch (err) {
      this.banner = `protocol error: ${String(err)}`;
      this.changed();
      return;
    }
    switch (frame.kind) {
      case "hello":
        if (frame.version !== PROTOCOL_VERSION) {
          this.banner = `server speaks protocol v${frame.version}, this UI v${PROTOCOL_VERSION}`;
        } else {
          this.serverHash = frame.set_hash;
          this.banner = null;
        }
        break;
      case "display":
        this.display = frame.model;
        this.banner = null;
        break;
      case "error":
        this.banner = `${frame.code}: ${frame.message}`;
        break;
      case "event":
        this.events.onEvent?.(frame);
        return; // display follows on the same broadcast
      default:
        break;
    }
    this.changed();
  }

  handleClose(): void {
    this.closed = true;
    this.banner = "connection lost";
    this.transport = null;
    this.changed();
  }

  /** Send exactly one pilot command; no optimistic rendering. */
  issue(commandText: string): void {
    if (!this.transport || this.closed) {
      this.banner = "not connected";
      this.changed();
      return;
    }
    try {
      this.transport.send(encodeFrame(commandFrame(commandText)));
    } catch (err) {
      this.banner = `send failed: ${String(err)}`;
      this.changed();
    }
  }

  markDone(ref: string): void {
    this.issue(`done ${ref}`);
  }

  wait(ref: string): void {
    this.issue(`wait ${ref}`);
  }

  checkAll(iblockRef: string): void {
    this.issue(`checkall ${iblockRef}`);
  }

  acknowledgePopup(proc: string, accept: boolean): void {
    this.issue(`ack ${proc} ${accept ? "accept" : "later"}`);
  }

  resume(proc: string): void {
    this.issue(`resume ${proc}`);
  }

  open(proc: string): void {
    this.issue(`open ${proc}`);
  }

  navigate(phase: string): void {
    this.issue(`page ${phase}`);
  }

  /** Swipe one phase left (-1) or right (+1) from the viewed page. */
  swipe(direction: -1 | 1): void {
    if (!this.display) return;
    const menu = this.display.phase_menu;
    const index = menu.indexOf(this.display.view_phase);
    if (index < 0) return;
    const next = menu[index + direction];
    if (next !== undefined) this.navigate(next);
  }

  private changed(): void {
    this.events.onChange?.();
  }
}
