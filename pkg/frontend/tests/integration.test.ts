// Live protocol fidelity: a real engine serves, this client taps the
// controls, and each tap must produce its exact display delta.

import net from "node:net";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import {
  ConnectedClient,
  LiveServer,
  connectClient,
  lineByRef,
  startServer,
} from "./helpers.js";
import { PROTOCOL_VERSION } from "../src/protocol.js";

let server: LiveServer;
let ui: ConnectedClient;

beforeEach(async () => {
  server = await startServer();
  ui = await connectClient(server.port);
  await ui.nextChange(() => ui.client.display !== null);
});

afterEach(async () => {
  ui.close();
  await server.stop();
});

function simFeed(port: number): Promise<{ send: (obj: object) => void; close: () => void }> {
  return new Promise((resolve, reject) => {
    const socket = net.createConnection({ host: "127.0.0.1", port }, () => {
      socket.write(JSON.stringify({
        kind: "hello", version: PROTOCOL_VERSION, set_hash: "", role: "sim",
      }) + "\n");
      resolve({
        send: (obj) => socket.write(JSON.stringify(obj) + "\n"),
        close: () => socket.destroy(),
      });
    });
    socket.on("error", reject);
  });
}

describe("tablet against a live session", () => {
  it("receives hello and the initial display", () => {
    expect(ui.client.serverHash).toMatch(/^[0-9a-f]{64}$/);
    expect(ui.client.banner).toBeNull();
    const display = ui.client.display!;
    expect(display.popup).toBeNull();
    expect(display.reminder_bar).toEqual([]);
    expect(display.phase_menu).toContain("FINAL_APPROACH");
  });

  it("WAIT turns the line amber, DONE turns it green", async () => {
    ui.client.open("FLAPS_LOCKED");
    await ui.nextChange(() => ui.client.display?.active_procedure === "FLAPS_LOCKED");
    expect(lineByRef(ui.client.display!, "FLAPS_LOCKED.FL1.A1").color).toBe("CYAN");

    ui.client.wait("FLAPS_LOCKED.FL1.A1");
    await ui.nextChange(
      () => lineByRef(ui.client.display!, "FLAPS_LOCKED.FL1.A1").color === "AMBER");
    const postponed = lineByRef(ui.client.display!, "FLAPS_LOCKED.FL1.A1");
    expect(postponed.status).toBe("POSTPONED");

    ui.client.markDone("FLAPS_LOCKED.FL1.A1");
    await ui.nextChange(
      () => lineByRef(ui.client.display!, "FLAPS_LOCKED.FL1.A1").color === "GREEN");
    expect(lineByRef(ui.client.display!, "FLAPS_LOCKED.FL1.A1").status).toBe("DONE_MANUAL");
  });

  it("check-all turns every applicable line of the iblock green", async () => {
    ui.client.open("ENG_SHUTDOWN");
    await ui.nextChange(() => ui.client.display?.active_procedure === "ENG_SHUTDOWN");
    ui.client.checkAll("ENG_SHUTDOWN.ES1");
    await ui.nextChange(
      () => lineByRef(ui.client.display!, "ENG_SHUTDOWN.ES1.A2").color === "GREEN");
    expect(lineByRef(ui.client.display!, "ENG_SHUTDOWN.ES1.A1").color).toBe("GREEN");
    expect(lineByRef(ui.client.display!, "ENG_SHUTDOWN.ES1.A2").color).toBe("GREEN");
    // The note stays white: informational, never "performed".
    expect(lineByRef(ui.client.display!, "ENG_SHUTDOWN.ES2.N1").color).toBe("WHITE");
  });

  it("LATER on a popup moves it to the reminder bar", async () => {
    const sim = await simFeed(server.port);
    sim.send({ kind: "state", tick: 1, phase: "FINAL_APPROACH",
               assignments: { FLAPS_POS: "CONF1", FLAPS_HANDLE_POS: "CONF3", IAS: 180 } });
    sim.send({ kind: "state", tick: 2, assignments: { IAS: 179 } });
    sim.send({ kind: "state", tick: 3, assignments: { IAS: 178 } });
    await ui.nextChange(() => ui.client.display?.popup?.proc === "FLAPS_LOCKED");
    expect(ui.client.display!.popup!.color).toBe("AMBER");

    ui.client.acknowledgePopup("FLAPS_LOCKED", false);
    await ui.nextChange(
      () => ui.client.display?.reminder_bar.some((r) => r.proc === "FLAPS_LOCKED") ?? false);
    expect(ui.client.display!.popup?.proc).not.toBe("FLAPS_LOCKED");
    sim.close();
  });

  it("reconnect reproduces the never-disconnected view", async () => {
    ui.client.open("FUEL_LEAK");
    await ui.nextChange(() => ui.client.display?.active_procedure === "FUEL_LEAK");
    ui.client.wait("FUEL_LEAK.FK1.A1");
    await ui.nextChange(
      () => lineByRef(ui.client.display!, "FUEL_LEAK.FK1.A1").status === "POSTPONED");

    const fresh = await connectClient(server.port);
    await fresh.nextChange(() => fresh.client.display !== null);
    expect(fresh.client.display).toEqual(ui.client.display);
    fresh.close();
  });

  it("all connected tablets see the same display after each step", async () => {
    const second = await connectClient(server.port);
    await second.nextChange(() => second.client.display !== null);
    ui.client.open("ENG_RELIGHT");
    await ui.nextChange(() => ui.client.display?.active_procedure === "ENG_RELIGHT");
    await second.nextChange(() => second.client.display?.active_procedure === "ENG_RELIGHT");
    expect(second.client.display).toEqual(ui.client.display);
    second.close();
  });
});
