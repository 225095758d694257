"""Live serve loop: one engine, one ordered inbox, broadcast to every UI.

Connection readers run concurrently but only ever append to the inbox; a
single engine thread applies states and commands and broadcasts the
resulting Event and Display frames, so every UI observes the same sequence
in the same order. The TCP listener speaks the canonical newline-delimited
frames; the optional WebSocket listener carries the very same frames as
text messages for browser clients.
"""
from __future__ import annotations

import logging
import queue
import socket
import threading
from typing import Optional

from . import protocol as wire
from .engine import Session, parse_command
from .errors import OcsisError
from .model import FlightPhase
from .scenario import Scenario, StateAccumulator

log = logging.getLogger("ocsis.serve")


class _Conn:
    """Transport-independent connection handle; sends are locked per-conn."""

    def __init__(self, send_frame, close, label: str):
        self._send_frame = send_frame
        self._close = close
        self.label = label
        self.role: Optional[str] = None
        self.lock = threading.Lock()
        self.alive = True

    def send(self, msg: wire.WireMessage) -> bool:
        if not self.alive:
            return False
        try:
            with self.lock:
                self._send_frame(wire.encode(msg))
            return True
        except OSError:
            self.alive = False
            return False

    def close(self) -> None:
        self.alive = False
        try:
            self._close()
        except OSError:
            pass


class FeedServer:
    def __init__(
        self,
        session: Session,
        host: str = "127.0.0.1",
        port: int = 0,
        ws_port: Optional[int] = 0,
        scenario: Optional[Scenario] = None,
        tick_rate: float = 1.0,
    ):
        self.session = session
        self.host = host
        self.port = port
        self.ws_port = ws_port
        self.scenario = scenario
        self.tick_rate = tick_rate
        self.inbox: "queue.Queue[tuple]" = queue.Queue()
        self.accumulator = StateAccumulator(session.pset.registry)
        self._uis: list[_Conn] = []
        self._sim: Optional[_Conn] = None
        self._conn_lock = threading.Lock()
        self._threads: list[threading.Thread] = []
        self._tcp_listener: Optional[socket.socket] = None
        self._ws_server = None
        self._stopping = threading.Event()

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self._tcp_listener = socket.create_server((self.host, self.port))
        self._tcp_listener.settimeout(0.25)  # lets the accept loop notice stop()
        self.port = self._tcp_listener.getsockname()[1]
        self._spawn(self._accept_loop, "ocsis-accept")
        if self.ws_port is not None:
            self._start_ws()
        self._spawn(self._engine_loop, "ocsis-engine")
        if self.scenario is not None and self.tick_rate > 0:
            self._spawn(self._playback_loop, "ocsis-playback")

    def stop(self) -> None:
        self._stopping.set()
        self.inbox.put(("stop",))
        if self._tcp_listener:
            try:
                self._tcp_listener.close()
            except OSError:
                pass
        if self._ws_server is not None:
            self._ws_server.shutdown()
        with self._conn_lock:
            conns = list(self._uis) + ([self._sim] if self._sim else [])
        for conn in conns:
            conn.close()
        for t in self._threads:
            t.join(timeout=5)

    def _spawn(self, target, name: str) -> None:
        t = threading.Thread(target=target, name=name, daemon=True)
        t.start()
        self._threads.append(t)

    # -- TCP ------------------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                sock, addr = self._tcp_listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            sock.settimeout(None)
            conn = _Conn(sock.sendall, sock.close, f"tcp:{addr[0]}:{addr[1]}")
            threading.Thread(
                target=self._tcp_reader, args=(sock, conn),
                name=f"ocsis-read-{addr[1]}", daemon=True,
            ).start()

    def _tcp_reader(self, sock: socket.socket, conn: _Conn) -> None:
        self._greet(conn)
        splitter = wire.FrameSplitter()
        try:
            while not self._stopping.is_set():
                data = sock.recv(65536)
                if not data:
                    break
                for frame in splitter.feed(data):
                    if not self._handle_frame(conn, frame):
                        return
        except OSError:
            pass
        finally:
            self._detach(conn)

    # -- WebSocket ---------------------------------------------------------------

    def _start_ws(self) -> None:
        from websockets.sync.server import serve as ws_serve

        def handler(ws):
            conn = _Conn(
                lambda frame: ws.send(frame.decode().rstrip("\n")),
                ws.close,
                f"ws:{ws.remote_address}",
            )
            self._greet(conn)
            try:
                for message in ws:
                    if isinstance(message, str):
                        message = message.encode()
                    if not self._handle_frame(conn, message):
                        return
            except Exception:
                pass
            finally:
                self._detach(conn)

        self._ws_server = ws_serve(handler, self.host, self.ws_port)
        self.ws_port = self._ws_server.socket.getsockname()[1]
        self._spawn(self._ws_server.serve_forever, "ocsis-ws")

    # -- shared connection handling -------------------------------------------------

    def _greet(self, conn: _Conn) -> None:
        conn.send(wire.Hello(wire.PROTOCOL_VERSION, self.session.set_hash, role="server"))
        conn.send(wire.Display(self.session.display_model().to_wire()))

    def _handle_frame(self, conn: _Conn, frame: bytes) -> bool:
        """Returns False when the connection must close."""
        try:
            msg = wire.decode(frame)
        except wire.ProtocolError as exc:
            log.warning("%s: %s", conn.label, exc)
            conn.send(wire.ErrorMsg("malformed_frame", str(exc)))
            return True
        if conn.role is None:
            return self._handshake(conn, msg)
        if isinstance(msg, wire.StateUpdate):
            if conn.role != "sim":
                conn.send(wire.ErrorMsg("role", "only the sim feed may send states"))
                return True
            self.inbox.put(("state", conn, msg))
        elif isinstance(msg, wire.Command):
            self.inbox.put(("command", conn, msg))
        elif isinstance(msg, wire.SnapshotRequest):
            self.inbox.put(("snapshot", conn))
        else:
            conn.send(wire.ErrorMsg("unexpected", f"unexpected {msg.KIND} frame"))
        return True

    def _handshake(self, conn: _Conn, msg: wire.WireMessage) -> bool:
        if not isinstance(msg, wire.Hello):
            conn.send(wire.ErrorMsg("handshake", "first frame must be hello"))
            conn.close()
            return False
        if msg.version != wire.PROTOCOL_VERSION:
            conn.send(wire.ErrorMsg(
                "version", f"server speaks {wire.PROTOCOL_VERSION}, client {msg.version}"))
            conn.close()
            return False
        if msg.set_hash and msg.set_hash != self.session.set_hash:
            conn.send(wire.ErrorMsg("hash", "procedure set hash mismatch"))
            conn.close()
            return False
        if msg.role == "sim":
            with self._conn_lock:
                if self._sim is not None and self._sim.alive:
                    conn.send(wire.ErrorMsg("role", "a sim feed is already connected"))
                    conn.close()
                    return False
                self._sim = conn
        else:
            with self._conn_lock:
                self._uis.append(conn)
        conn.role = msg.role
        return True

    def _detach(self, conn: _Conn) -> None:
        conn.close()
        with self._conn_lock:
            if conn in self._uis:
                self._uis.remove(conn)
            if self._sim is conn:
                self._sim = None

    # -- engine thread -----------------------------------------------------------

    def _engine_loop(self) -> None:
        while True:
            item = self.inbox.get()
            if item[0] == "stop":
                return
            if item[0] == "snapshot":
                _, conn = item
                conn.send(wire.SnapshotReply(self.session.snapshot().decode()))
                continue
            kind, conn, msg = item
            try:
                if kind == "state":
                    phase = FlightPhase[msg.phase] if msg.phase else None
                    state = self.accumulator.fold(
                        msg.tick, sorted(msg.assignments.items()), phase)
                    events = self.session.apply_state(state)
                else:
                    events = self.session.apply_command(parse_command(msg.text))
            except (OcsisError, KeyError) as exc:
                if conn is not None:
                    conn.send(wire.ErrorMsg("engine", str(exc)))
                continue
            self._broadcast(events)

    def _broadcast(self, events) -> None:
        with self._conn_lock:
            uis = list(self._uis)
        frames = [wire.Event(e.to_wire()) for e in events]
        frames.append(wire.Display(self.session.display_model().to_wire()))
        for conn in uis:
            for frame in frames:
                if not conn.send(frame):
                    self._detach(conn)
                    break

    # -- scenario playback ----------------------------------------------------------

    def _playback_loop(self) -> None:
        if self.scenario.commands:
            log.info("scenario pilot commands are ignored in serve mode")
        prev_tick = 0
        for entry in self.scenario.timeline:
            delay = (entry.tick - prev_tick) / self.tick_rate
            prev_tick = entry.tick
            if self._stopping.wait(timeout=max(delay, 0.0)):
                return
            self.inbox.put(("state", None, wire.StateUpdate(
                entry.tick, dict(entry.assignments),
                entry.phase.name if entry.phase else None)))
        log.info("scenario playback finished; engine idles")
