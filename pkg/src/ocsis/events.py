"""Engine events: the observable output stream of a session.

Every event is stamped with the session tick that caused it and a gapless,
strictly increasing sequence number. The canonical log line form
(`seq tick KIND fields`) is what traces, replay verification, and the wire
Event frame all share.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

from .errors import OcsisError
from .model import ActionStatus


@dataclass(frozen=True)
class EngineEvent:
    seq: int
    tick: int

    KIND = ""

    def _fields_text(self) -> str:
        raise NotImplementedError

    def render_log(self) -> str:
        return f"{self.seq} {self.tick} {self.KIND} {self._fields_text()}".rstrip()

    def to_wire(self) -> dict:
        payload = {"event": self.KIND}
        for f in fields(self):
            v = getattr(self, f.name)
            payload[f.name] = v.value if isinstance(v, ActionStatus) else v
        return payload


@dataclass(frozen=True)
class PopupRaised(EngineEvent):
    proc: str
    ecam: bool = False

    KIND = "POPUP_RAISED"

    def _fields_text(self) -> str:
        return f"{self.proc} ecam={1 if self.ecam else 0}"


@dataclass(frozen=True)
class ReminderShown(EngineEvent):
    proc: str

    KIND = "REMINDER_SHOWN"

    def _fields_text(self) -> str:
        return self.proc


@dataclass(frozen=True)
class ActionAutoCompleted(EngineEvent):
    ref: str

    KIND = "ACTION_AUTO_COMPLETED"

    def _fields_text(self) -> str:
        return self.ref


@dataclass(frozen=True)
class ActionStatusChanged(EngineEvent):
    ref: str
    old: ActionStatus
    new: ActionStatus

    KIND = "ACTION_STATUS_CHANGED"

    def _fields_text(self) -> str:
        return f"{self.ref} {self.old.value} {self.new.value}"


@dataclass(frozen=True)
class ProcedureActivated(EngineEvent):
    proc: str

    KIND = "PROCEDURE_ACTIVATED"

    def _fields_text(self) -> str:
        return self.proc


@dataclass(frozen=True)
class ProcedurePushed(EngineEvent):
    proc: str
    parent: str

    KIND = "PROCEDURE_PUSHED"

    def _fields_text(self) -> str:
        return f"{self.proc} parent={self.parent}"


@dataclass(frozen=True)
class ProcedureReturned(EngineEvent):
    parent: str
    cursor: int

    KIND = "PROCEDURE_RETURNED"

    def _fields_text(self) -> str:
        return f"{self.parent} cursor={self.cursor}"


@dataclass(frozen=True)
class ProcedureCompleted(EngineEvent):
    proc: str

    KIND = "PROCEDURE_COMPLETED"

    def _fields_text(self) -> str:
        return self.proc


@dataclass(frozen=True)
class GoalReached(EngineEvent):
    iblock: str

    KIND = "GOAL_REACHED"

    def _fields_text(self) -> str:
        return self.iblock


@dataclass(frozen=True)
class AbnormalBranch(EngineEvent):
    iblock: str
    proc: str

    KIND = "ABNORMAL_BRANCH"

    def _fields_text(self) -> str:
        return f"{self.iblock} {self.proc}"


@dataclass(frozen=True)
class DoneContradicted(EngineEvent):
    """Warning: live state no longer satisfies a completed action's detect.

    The action stays done; silently regressing pilot-confirmed work would be
    worse than flagging it.
    """
    ref: str

    KIND = "DONE_CONTRADICTED"

    def _fields_text(self) -> str:
        return self.ref


EVENT_TYPES: dict[str, type] = {
    cls.KIND: cls
    for cls in (
        PopupRaised, ReminderShown, ActionAutoCompleted, ActionStatusChanged,
        ProcedureActivated, ProcedurePushed, ProcedureReturned,
        ProcedureCompleted, GoalReached, AbnormalBranch, DoneContradicted,
    )
}


def event_from_wire(payload: dict) -> EngineEvent:
    kind = payload.get("event")
    cls = EVENT_TYPES.get(kind)
    if cls is None:
        raise OcsisError(f"unknown event kind {kind!r}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in payload:
            raise OcsisError(f"event {kind} missing field {f.name}")
        v = payload[f.name]
        kwargs[f.name] = ActionStatus(v) if f.type == "ActionStatus" else v
    return cls(**kwargs)
