"""Wire protocol: newline-delimited UTF-8 frames, one JSON object per frame.

Every frame carries a `kind` field. The same frames travel over TCP (the
canonical transport) and WebSocket text messages (for browser clients);
payload bytes are identical either way. A malformed frame is a recoverable
per-frame error: the connection survives and the next frame decodes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import OcsisError

PROTOCOL_VERSION = 1


class ProtocolError(OcsisError):
    pass


class MalformedFrame(ProtocolError):
    pass


class UnknownMessageKind(ProtocolError):
    pass


class UnsupportedVersion(ProtocolError):
    pass


@dataclass(frozen=True)
class Hello:
    version: int
    set_hash: str
    role: str = "ui"  # "ui" | "sim" | "server"

    KIND = "hello"


@dataclass(frozen=True)
class StateUpdate:
    tick: int
    assignments: dict = field(default_factory=dict)
    phase: Optional[str] = None

    KIND = "state"


@dataclass(frozen=True)
class Command:
    text: str  # canonical pilot-command form, e.g. "done FUEL_LEAK.FL1.A2"

    KIND = "command"


@dataclass(frozen=True)
class Event:
    payload: dict

    KIND = "event"


@dataclass(frozen=True)
class Display:
    model: dict

    KIND = "display"


@dataclass(frozen=True)
class SnapshotRequest:
    KIND = "snapshot_request"


@dataclass(frozen=True)
class SnapshotReply:
    blob: str  # UTF-8 snapshot body

    KIND = "snapshot_reply"


@dataclass(frozen=True)
class ErrorMsg:
    code: str
    message: str

    KIND = "error"


WireMessage = (
    Hello | StateUpdate | Command | Event | Display
    | SnapshotRequest | SnapshotReply | ErrorMsg
)


def encode(msg: WireMessage) -> bytes:
    """One frame, trailing newline included."""
    if isinstance(msg, Hello):
        doc = {"kind": msg.KIND, "version": msg.version,
               "set_hash": msg.set_hash, "role": msg.role}
    elif isinstance(msg, StateUpdate):
        doc = {"kind": msg.KIND, "tick": msg.tick,
               "assignments": msg.assignments, "phase": msg.phase}
    elif isinstance(msg, Command):
        doc = {"kind": msg.KIND, "text": msg.text}
    elif isinstance(msg, Event):
        doc = {"kind": msg.KIND, **msg.payload}
    elif isinstance(msg, Display):
        doc = {"kind": msg.KIND, "model": msg.model}
    elif isinstance(msg, SnapshotRequest):
        doc = {"kind": msg.KIND}
    elif isinstance(msg, SnapshotReply):
        doc = {"kind": msg.KIND, "blob": msg.blob}
    elif isinstance(msg, ErrorMsg):
        doc = {"kind": msg.KIND, "code": msg.code, "message": msg.message}
    else:
        raise ProtocolError(f"cannot encode {msg!r}")
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def decode(frame: bytes | str) -> WireMessage:
    if isinstance(frame, bytes):
        try:
            frame = frame.decode()
        except UnicodeDecodeError as exc:
            raise MalformedFrame(f"not UTF-8: {exc}") from None
    frame = frame.strip()
    try:
        doc = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"not a JSON frame: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedFrame("frame is not an object")
    kind = doc.get("kind")
    try:
        if kind == Hello.KIND:
            return Hello(int(doc["version"]), str(doc["set_hash"]),
                         str(doc.get("role", "ui")))
        if kind == StateUpdate.KIND:
            assignments = doc.get("assignments", {})
            if not isinstance(assignments, dict):
                raise MalformedFrame("assignments must be an object")
            phase = doc.get("phase")
            return StateUpdate(int(doc["tick"]), assignments,
                               str(phase) if phase is not None else None)
        if kind == Command.KIND:
            return Command(str(doc["text"]))
        if kind == Event.KIND:
            payload = {k: v for k, v in doc.items() if k != "kind"}
            return Event(payload)
        if kind == Display.KIND:
            return Display(dict(doc["model"]))
        if kind == SnapshotRequest.KIND:
            return SnapshotRequest()
        if kind == SnapshotReply.KIND:
            return SnapshotReply(str(doc["blob"]))
        if kind == ErrorMsg.KIND:
            return ErrorMsg(str(doc["code"]), str(doc["message"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFrame(f"bad {kind} frame: {exc}") from None
    raise UnknownMessageKind(f"unknown frame kind {kind!r}")


class FrameSplitter:
    """Incremental newline splitter for a byte stream."""

    def __init__(self):
        self._buffer = b""

    def feed(self, data: bytes) -> list[bytes]:
        self._buffer += data
        frames = []
        while b"\n" in self._buffer:
            frame, self._buffer = self._buffer.split(b"\n", 1)
            if frame.strip():
                frames.append(frame)
        return frames
